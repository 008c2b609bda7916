#include "cyclecraft/config.hpp"

#include <cstdlib>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace cyclecraft {

using nlohmann::json;

static void merge_keys(Config& c, const json& j) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& k = it.key();
    const json& v = it.value();
    if (k == "seed") c.seed = v.get<std::uint64_t>();
    else if (k == "mass_rel_tol") c.mass_rel_tol = v.get<double>();
    else if (k == "ff_retry_budget") c.ff_retry_budget = v.get<int>();
    else if (k == "ff_blowup_base") c.ff_blowup_base = v.get<double>();
    else if (k == "c_slice") c.c_slice = v.get<double>();
    else if (k == "slice_candidate_factor") c.slice_candidate_factor = v.get<int>();
    else if (k == "slice_candidate_cap") c.slice_candidate_cap = v.get<int>();
    else if (k == "subdivide_depth") c.subdivide_depth = v.get<int>();
    else if (k == "kernel_bits_budget") c.kernel_bits_budget = v.get<int>();
    else if (k == "bb_node_budget") c.bb_node_budget = v.get<std::uint64_t>();
    else if (k == "ilp_coeff_bound") c.ilp_coeff_bound = v.get<int>();
    else if (k == "ilp_node_budget") c.ilp_node_budget = v.get<std::uint64_t>();
    else if (k == "max_family_dim") c.max_family_dim = v.get<int>();
    else if (k == "max_coarea_dim") c.max_coarea_dim = v.get<int>();
    else if (k == "c_regions") c.c_regions = v.get<double>();
    else if (k == "eps0_factor") c.eps0_factor = v.get<double>();
    else if (k == "iso_apex_cap") c.iso_apex_cap = v.get<double>();
    else if (k == "family_c") c.family_c = v.get<double>();
    else if (k == "family_eps0") c.family_eps0 = v.get<double>();
    else if (k == "family_delta0") c.family_delta0 = v.get<double>();
    else if (k == "cover_cap") c.cover_cap = v.get<int>();
    else if (k == "family_exact_limit") c.family_exact_limit = v.get<int>();
    else if (k == "witness_extra") c.witness_extra = v.get<int>();
    else if (k == "threads") c.threads = v.get<int>();
    else if (k == "budget_seconds") c.budget_seconds = v.get<double>();
    else throw std::invalid_argument("unknown config key: " + k);
  }
}

Config Config::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file: " + path);
  json j;
  in >> j;
  Config c;
  merge_keys(c, j);
  return c;
}

Config Config::resolve(const std::string& explicit_path) {
  if (!explicit_path.empty()) return load(explicit_path);
  if (const char* env = std::getenv("CYCLECRAFT_CONFIG"); env && *env) return load(env);
  return Config{};
}

std::string Config::to_json() const {
  json j{{"seed", seed},
         {"mass_rel_tol", mass_rel_tol},
         {"ff_retry_budget", ff_retry_budget},
         {"ff_blowup_base", ff_blowup_base},
         {"c_slice", c_slice},
         {"slice_candidate_factor", slice_candidate_factor},
         {"slice_candidate_cap", slice_candidate_cap},
         {"subdivide_depth", subdivide_depth},
         {"kernel_bits_budget", kernel_bits_budget},
         {"bb_node_budget", bb_node_budget},
         {"ilp_coeff_bound", ilp_coeff_bound},
         {"ilp_node_budget", ilp_node_budget},
         {"max_family_dim", max_family_dim},
         {"max_coarea_dim", max_coarea_dim},
         {"c_regions", c_regions},
         {"eps0_factor", eps0_factor},
         {"iso_apex_cap", iso_apex_cap},
         {"family_c", family_c},
         {"family_eps0", family_eps0},
         {"family_delta0", family_delta0},
         {"cover_cap", cover_cap},
         {"family_exact_limit", family_exact_limit},
         {"witness_extra", witness_extra},
         {"threads", threads},
         {"budget_seconds", budget_seconds}};
  return j.dump(2);
}

std::uint64_t stream_seed(std::uint64_t seed, const std::string& tag) {
  // FNV-1a over the tag, mixed with the base seed (splitmix-style finalizer).
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : tag) { h ^= c; h *= 1099511628211ull; }
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull + h;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

}  // namespace cyclecraft
