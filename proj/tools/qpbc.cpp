// qpbc: bounds, relaxations, certificates, and global solves for QPs over
// polytopes.  Subcommands: bound, relax, solve, oracle, gen, compare.

#include <CLI11.hpp>
#include <cstdio>
#include <iostream>
#include <json.hpp>

#include "qpbc/bench.hpp"
#include "qpbc/bnc.hpp"
#include "qpbc/bounds.hpp"
#include "qpbc/instance_io.hpp"

using namespace qpbc;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalidInput = 2;
constexpr int kExitNumerical = 3;

BoundVariant parse_variant(const std::string& s) {
  if (s == "L") return BoundVariant::L;
  if (s == "L1") return BoundVariant::L1;
  if (s == "BOX") return BoundVariant::BOX;
  throw CLI::ValidationError("variant must be one of L, L1, BOX");
}

int cmd_bound(const std::string& input, const std::string& variant_s, double cap, bool has_cap) {
  auto inst = read_instance_file(input).to_instance();
  auto variant = parse_variant(variant_s);
  std::optional<double> cap_opt;
  if (has_cap) cap_opt = cap;
  auto br = solve_bound(inst, variant, cap_opt);
  nlohmann::json j;
  j["instance"] = inst.name;
  j["variant"] = to_string(variant);
  j["status"] = to_string(br.status);
  if (br.ok()) j["value"] = br.value;
  std::cout << j.dump(2) << "\n";
  return br.ok() ? kExitOk : kExitNumerical;
}

int cmd_relax(const std::string& input) {
  auto inst = read_instance_file(input).to_instance();
  auto rr = solve_relaxation(inst);
  nlohmann::json j;
  j["instance"] = inst.name;
  j["status"] = to_string(rr.status);
  if (rr.ok()) j["value"] = rr.value;
  std::cout << j.dump(2) << "\n";
  return rr.ok() ? kExitOk : kExitNumerical;
}

int cmd_solve(const std::string& input, const BnCConfig& cfg, const std::string& variant_s,
              bool print_log) {
  auto inst = read_instance_file(input).to_instance();
  BnCConfig c = cfg;
  c.bound_variant = parse_variant(variant_s);
  auto r = solve_bnc(inst, c);
  if (print_log)
    for (const auto& ev : r.events)
      std::fprintf(stderr, "node %ld parent %ld l_k %.10g u %.10g %s\n", ev.id, ev.parent,
                   ev.lower, ev.upper, ev.action.c_str());
  nlohmann::json j;
  j["status"] = to_string(r.status);
  j["lower"] = r.lower;
  j["upper"] = r.upper;
  nlohmann::json inc = nlohmann::json::array();
  for (int i = 0; i < r.incumbent.size(); ++i) inc.push_back(r.incumbent[i]);
  j["incumbent"] = std::move(inc);
  j["nodes"] = r.nodes_processed;
  j["cuts"] = r.cuts_added;
  j["time_sec"] = r.wall_time_sec;
  std::cout << j.dump(2) << "\n";
  return kExitOk;
}

int cmd_oracle(const std::string& input) {
  auto inst = read_instance_file(input).to_instance();
  auto o = brute_force_optimum(inst);
  nlohmann::json j;
  j["instance"] = inst.name;
  j["value"] = o.value;
  j["exact"] = o.exact;
  nlohmann::json arg = nlohmann::json::array();
  for (int i = 0; i < o.argmin.size(); ++i) arg.push_back(o.argmin[i]);
  j["argmin"] = std::move(arg);
  std::cout << j.dump(2) << "\n";
  return kExitOk;
}

int cmd_gen(const std::string& kind_s, int n, std::uint64_t seed, int equalities, bool box,
            bool indefinite, const std::string& out) {
  GenSpec spec;
  if (kind_s == "dense_concave")
    spec.kind = GenKind::dense_concave;
  else if (kind_s == "norm_max")
    spec.kind = GenKind::norm_max;
  else if (kind_s == "stqp")
    spec.kind = GenKind::stqp;
  else if (kind_s == "box_qp")
    spec.kind = GenKind::box_qp;
  else
    throw CLI::ValidationError("kind must be dense_concave|norm_max|stqp|box_qp");
  spec.n = n;
  spec.seed = seed;
  spec.equalities = equalities;
  spec.box = box;
  spec.indefinite = indefinite;
  auto f = generate_instance(spec);
  write_instance_file(f, out);
  std::fprintf(stderr, "wrote %s\n", out.c_str());
  return kExitOk;
}

int cmd_compare(const std::string& input) {
  auto file = read_instance_file(input);
  auto inst = file.to_instance();
  nlohmann::json j;
  j["instance"] = inst.name;
  auto l = solve_bound(inst, BoundVariant::L);
  j["L"] = l.ok() ? nlohmann::json(l.value) : nlohmann::json(to_string(l.status));
  auto l1 = solve_bound(inst, BoundVariant::L1);
  j["L1"] = l1.ok() ? nlohmann::json(l1.value) : nlohmann::json(to_string(l1.status));
  try {
    auto bx = solve_bound(inst, BoundVariant::BOX);
    j["BOX"] = bx.ok() ? nlohmann::json(bx.value) : nlohmann::json(to_string(bx.status));
  } catch (const std::invalid_argument&) {
    j["BOX"] = nullptr;  // not an axis-aligned box
  }
  auto rr = solve_relaxation(inst);
  j["DD0"] = rr.ok() ? nlohmann::json(rr.value) : nlohmann::json(to_string(rr.status));
  auto o = brute_force_optimum(inst);
  j["oracle"] = o.value;
  j["oracle_exact"] = o.exact;
  std::cout << j.dump(2) << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"affine-multiplier bounds and branch-and-cut for QPs over polytopes"};
  app.require_subcommand(1);

  std::string input, out, variant = "L", kind = "dense_concave";
  double cap = 0.0;
  bool has_cap = false, box = false, indefinite = false, print_log = false, parallel = false;
  int n = 8, equalities = 0;
  std::uint64_t seed = 1;
  BnCConfig cfg;

  auto* bound = app.add_subcommand("bound", "solve the affine-multiplier bound SDP");
  bound->add_option("--input", input)->required();
  bound->add_option("--variant", variant);
  auto* cap_opt = bound->add_option("--cap", cap, "add the constraint level <= cap");

  auto* relax = app.add_subcommand("relax", "solve the moment relaxation");
  relax->add_option("--input", input)->required();

  auto* solve = app.add_subcommand("solve", "global branch-and-cut solve");
  solve->add_option("--input", input)->required();
  solve->add_option("--eps", cfg.eps);
  solve->add_option("--time-limit", cfg.time_limit_sec);
  solve->add_option("--seed", cfg.seed);
  solve->add_option("--max-nodes", cfg.max_nodes);
  solve->add_option("--variant", variant);
  solve->add_flag("--parallel", parallel);
  solve->add_flag("--log", print_log, "print the node event log to stderr");

  auto* oracle = app.add_subcommand("oracle", "brute-force optimum");
  oracle->add_option("--input", input)->required();

  auto* gen = app.add_subcommand("gen", "generate a test instance");
  gen->add_option("--kind", kind);
  gen->add_option("--n", n);
  gen->add_option("--seed", seed);
  gen->add_option("--equalities", equalities);
  gen->add_flag("--box", box);
  gen->add_flag("--indefinite", indefinite);
  gen->add_option("--out", out)->required();

  auto* compare = app.add_subcommand("compare", "print all bounds and the oracle");
  compare->add_option("--input", input)->required();

  CLI11_PARSE(app, argc, argv);
  has_cap = cap_opt->count() > 0;
  cfg.parallel = parallel;

  try {
    if (bound->parsed()) return cmd_bound(input, variant, cap, has_cap);
    if (relax->parsed()) return cmd_relax(input);
    if (solve->parsed()) return cmd_solve(input, cfg, variant, print_log);
    if (oracle->parsed()) return cmd_oracle(input);
    if (gen->parsed()) return cmd_gen(kind, n, seed, equalities, box, indefinite, out);
    if (compare->parsed()) return cmd_compare(input);
  } catch (const EmptyPolytopeError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitInvalidInput;
  } catch (const UnboundedPolytopeError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitInvalidInput;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitInvalidInput;
  } catch (const nlohmann::json::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitInvalidInput;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitNumerical;
  }
  return kExitOk;
}
