// SPDX-License-Identifier: Apache-2.0
// Command-line front end: catalog building, pairing, routing, evaluation,
// clustering, budget sweeps and synthetic-world export.
//
// Exit codes: 0 success, 2 invalid input or configuration, 3 file I/O failure.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <sstream>

#include "CLI11.hpp"
#include "adaroute/adaroute.hpp"

namespace fs = std::filesystem;
using namespace adaroute;

namespace {

constexpr int kExitInvalid = 2;
constexpr int kExitIo = 3;

struct EncoderOptions {
  std::string kind;  // empty: the world's encoder when a world is loaded, else hashed-ngram
  std::size_t dim = 256;
  std::uint64_t seed = HashedNgramEncoder::kDefaultSeed;
  std::string requests;
  std::string responses;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--encoder", kind, "hashed-ngram | table | world");
    cmd->add_option("--dim", dim, "hashed-ngram dimension")->capture_default_str();
    cmd->add_option("--encoder-seed", seed, "hashed-ngram hashing seed");
    cmd->add_option("--embeddings-requests", requests, "table encoder: request JSON lines");
    cmd->add_option("--embeddings-responses", responses, "table encoder: response JSON lines");
  }

  std::shared_ptr<const Encoder> make(const SyntheticWorld* w) const {
    if (kind.empty() && w != nullptr) return w->encoder;
    if (kind.empty()) return std::make_shared<HashedNgramEncoder>(dim, seed);
    if (kind == "hashed-ngram") return std::make_shared<HashedNgramEncoder>(dim, seed);
    if (kind == "table") {
      if (requests.empty() || responses.empty()) {
        throw ConfigError("--encoder table needs --embeddings-requests and --embeddings-responses");
      }
      return std::make_shared<TableEncoder>(load_table_encoder(requests, responses));
    }
    if (kind == "world") {
      if (w == nullptr) throw ConfigError("--encoder world needs --world");
      return w->encoder;
    }
    throw ConfigError("unknown encoder '" + kind + "'");
  }
};

/// Where scores come from: a synthetic world spec or replayed predictions.
struct EvaluatorOptions {
  std::string world;
  std::string predictions;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--world", world, "synthetic world spec (JSON) providing the evaluator");
    cmd->add_option("--predictions", predictions, "JSON lines of {adapter_id, input, output}");
  }

  std::optional<SyntheticWorld> load_world() const {
    if (world.empty()) return std::nullopt;
    return generate_world(world_spec_from_json(read_json_file(world)));
  }

  std::shared_ptr<const Evaluator> make(const std::optional<SyntheticWorld>& w) const {
    if (w) return w->evaluator;
    if (!predictions.empty()) return std::make_shared<ReplayEvaluator>(load_replay_evaluator(predictions));
    throw ConfigError("an evaluator is required: pass --world or --predictions");
  }
};

void write_or_print(const json& j, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << canonical_dump(j);
  } else {
    write_text_file(path, canonical_dump(j));
  }
}

std::vector<ValidationItem> read_items(const fs::path& path) {
  std::vector<ValidationItem> items;
  for (const auto& j : read_json_lines(path)) {
    items.push_back({field<std::string>(j, "input", "item"), j.value("target", std::string{})});
  }
  return items;
}

TestSets test_sets_from_json(const json& j) {
  if (!j.is_object() || !j.contains("test_sets") || !j.at("test_sets").is_object()) {
    throw FormatError("test file: expected {\"test_sets\": {task_id: [items]}}");
  }
  TestSets out;
  for (const auto& [task, items] : j.at("test_sets").items()) {
    auto& dst = out[task];
    for (const auto& item : items) {
      dst.push_back({field<std::string>(item, "input", "test item"), field<std::string>(item, "target", "test item")});
    }
  }
  return out;
}

json test_sets_to_json(const TestSets& sets) {
  json j = json::object();
  for (const auto& [task, items] : sets) {
    json arr = json::array();
    for (const auto& i : items) arr.push_back({{"input", i.input}, {"target", i.target}});
    j[task] = arr;
  }
  return {{"test_sets", j}};
}

std::vector<std::size_t> parse_budgets(const std::string& csv) {
  std::vector<std::size_t> out;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      std::size_t used = 0;
      const unsigned long long v = std::stoull(tok, &used);
      if (used != tok.size()) throw std::invalid_argument(tok);
      out.push_back(static_cast<std::size_t>(v));
    } catch (const std::exception&) {
      throw ConfigError("bad budget '" + tok + "'");
    }
  }
  if (out.empty()) throw ConfigError("no budgets given");
  return out;
}

// --- subcommands ---------------------------------------------------------------

struct CatalogBuild {
  std::string tasks, adapters, out;
  std::size_t m = kDefaultRepresentationSamples;
  std::uint64_t seed = 0;
  std::size_t validation_cap = kDefaultValidationCap;
  EncoderOptions enc;

  int run() const {
    Catalog c;
    c.validation_cap = validation_cap;
    for (auto& t : tasks_from_json(read_json_file(tasks))) {
      std::string id = t.id;
      if (!c.tasks.emplace(id, std::move(t)).second) throw ValidationError("duplicate task id '" + id + "'");
    }
    if (!adapters.empty()) c.pool = load_adapter_pool(adapters);
    c = build_representations(c, *enc.make(nullptr), m, seed);
    c.adapter_pool_path = fs::path(out).stem().string() + ".adapters.json";
    save_catalog(c, out);
    std::cerr << "catalog: " << c.tasks.size() << " tasks, " << c.pool.size() << " adapters -> " << out << "\n";
    return 0;
  }
};

struct Pair {
  std::string catalog, out, strategy = "exhaustive";
  std::size_t budget = 0, base_samples = 8, warmup = 1, rounds = 0;
  double eta = 0.5, gamma = 2.0;
  std::uint64_t seed = 0;
  bool only_unpaired = false;
  EvaluatorOptions ev;

  int run() const {
    const Catalog c = load_catalog(catalog);
    const auto world = ev.load_world();
    const auto evaluator = ev.make(world);
    PairingStrategy s = Exhaustive{};
    if (strategy == "uniform") {
      if (budget == 0) throw ConfigError("--strategy uniform needs --budget");
      s = Uniform{budget, seed};
    } else if (strategy == "sh") {
      ShConfig cfg{base_samples, eta, gamma, rounds, warmup, seed};
      cfg.validate();
      s = cfg;
    } else if (strategy != "exhaustive") {
      throw ConfigError("unknown strategy '" + strategy + "'");
    }
    const PairingResult r = build_pairing(c, *evaluator, s, only_unpaired);
    const fs::path dst = out.empty() ? fs::path(catalog) : fs::path(out);
    save_catalog(r.catalog, dst);
    fs::path sidecar = dst;
    sidecar.replace_extension(".pairing.json");
    write_text_file(sidecar, canonical_dump(pairing_report_to_json(r.report)));
    std::size_t spent = 0;
    for (const auto& [t, o] : r.report) spent += o.total_budget_spent;
    std::cerr << "paired " << r.report.size() << " tasks, budget spent " << spent << " -> " << dst.string() << "\n";
    return 0;
  }
};

struct Route {
  std::string catalog, query, batch, world;
  std::size_t k = kDefaultTopK;
  double temperature = kDefaultTemperature;
  EncoderOptions enc;

  int run() const {
    const Catalog c = load_catalog(catalog);
    std::optional<SyntheticWorld> w;
    if (!world.empty()) w = generate_world(world_spec_from_json(read_json_file(world)));
    const auto encoder = enc.make(w ? &*w : nullptr);
    if (query.empty() == batch.empty()) throw ConfigError("pass exactly one of --query or --batch");
    if (!query.empty()) {
      std::cout << decision_to_json(route(c, *encoder, query, k, temperature, "query")).dump() << "\n";
      return 0;
    }
    std::size_t n = 0;
    for (const auto& j : read_json_lines(batch)) {
      const std::string id = j.value("query_id", std::to_string(n));
      ++n;
      std::cout << decision_to_json(route(c, *encoder, field<std::string>(j, "text", "batch line"), k, temperature, id)).dump()
                << "\n";
    }
    return 0;
  }
};

struct Eval {
  std::string catalog, regime = "non-ood", test, report;
  std::size_t k = kDefaultTopK;
  double temperature = kDefaultTemperature;
  EncoderOptions enc;
  EvaluatorOptions ev;

  int run() const {
    const Catalog c = load_catalog(catalog);
    const auto world = ev.load_world();
    const auto evaluator = ev.make(world);
    const auto encoder = enc.make(world ? &*world : nullptr);
    TestSets tests;
    if (!test.empty()) {
      tests = test_sets_from_json(read_json_file(test));
    } else if (world) {
      tests = world->test_sets;
    } else {
      throw ConfigError("--test is required without --world");
    }
    // The oracle is the world's aligned adapter, or else each task's exhaustive winner.
    const auto aligned = world ? world->aligned : build_pairing(c, *evaluator, Exhaustive{}).catalog.pairing;
    const RouterConfig router{encoder.get(), k, temperature, Exhaustive{}};
    auto r = run_regime(c, regime_from_name(regime), router, *evaluator, tests, aligned);
    if (!world) r.oracle_note = "oracle = exhaustive-pairing winner on validation, scored on the task's test items";
    write_or_print(report_to_json(r), report);
    std::cerr << regime_name(r.regime) << " normalized average " << r.average.value << "\n";
    return 0;
  }
};

struct Cluster {
  std::string items, out, adapters;
  std::size_t k = 12;
  std::uint64_t seed = 0;
  std::string metric = "rouge_avg";
  EncoderOptions enc;

  int run() const {
    const auto encoder = enc.make(nullptr);
    const PseudoTasks p = build_pseudo_tasks(read_items(items), *encoder, k, seed, metric_from_name(metric));
    Catalog c;
    for (const auto& t : p.tasks) {
      if (t.validation.empty()) continue;
      c.tasks[t.id] = t;
    }
    c.encoder_fingerprint = encoder->spec().fingerprint;
    if (!adapters.empty()) c.pool = load_adapter_pool(adapters);
    c.adapter_pool_path = fs::path(out).stem().string() + ".adapters.json";
    save_catalog(c, out);
    std::cerr << "clustered into " << c.tasks.size() << " pseudo-tasks, inertia " << p.model.inertia << " -> " << out
              << "\n";
    return 0;
  }
};

struct Sweep {
  std::string world, budgets, report, task;
  std::size_t runs = 100;
  std::uint64_t seed = 0;
  std::size_t base_samples = 8;

  int run() const {
    const SyntheticWorld w = generate_world(world_spec_from_json(read_json_file(world)));
    const std::string tid = task.empty() ? w.catalog.tasks.begin()->first : task;
    auto t = w.catalog.tasks.find(tid);
    if (t == w.catalog.tasks.end()) throw NotFoundError("task '" + tid + "'");
    std::vector<std::string> pool;
    for (const auto& [id, a] : w.catalog.pool) pool.push_back(id);
    ShConfig base;
    base.base_samples = base_samples;
    const SweepTable table = budget_sweep(t->second, pool, *w.evaluator, parse_budgets(budgets), runs, seed, base);
    json j = sweep_to_json(table);
    const auto u = budget_to_reach(table, "uniform", 0.95);
    const auto s = budget_to_reach(table, "sh", 0.95);
    j["budget_to_95"] = {{"uniform", u ? json(*u) : json(nullptr)}, {"sh", s ? json(*s) : json(nullptr)}};
    write_or_print(j, report);
    return 0;
  }
};

struct WorldExport {
  std::string spec, out_dir;

  int run() const {
    const SyntheticWorld w = generate_world(world_spec_from_json(read_json_file(spec)));
    const fs::path dir(out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());
    Catalog c = w.catalog;
    save_catalog(c, dir / "catalog.json");
    write_text_file(dir / "backend.json", canonical_dump(backend_to_json(w.backend())));
    write_text_file(dir / "test.json", canonical_dump(test_sets_to_json(w.test_sets)));
    write_text_file(dir / "aligned.json", canonical_dump(json(w.aligned)));
    write_text_file(dir / "world.json", canonical_dump(world_spec_to_json(w.spec)));
    std::vector<EncodeRequest> req;
    std::vector<std::pair<std::string, Vector>> resp;
    auto add = [&](const ValidationItem& item) {
      const std::string id = "e" + std::to_string(req.size());
      req.push_back({id, std::string(kRetrievalInstruction), item.input});
      resp.push_back({id, w.encoder->encode(item.input).values});
    };
    for (const auto& [id, t] : c.tasks)
      for (const auto& item : t.validation) add(item);
    for (const auto& [id, items] : w.test_sets)
      for (const auto& item : items) add(item);
    write_encode_requests(req, dir / "embed_requests.jsonl");
    write_encode_responses(resp, dir / "embed_responses.jsonl");
    std::cerr << "world: " << c.tasks.size() << " tasks, " << c.pool.size() << " adapters -> " << dir.string() << "\n";
    return 0;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Training-free LoRA adapter routing"};
  app.require_subcommand(1);

  auto* cat = app.add_subcommand("catalog", "catalog operations");
  cat->require_subcommand(1);
  CatalogBuild build;
  auto* build_cmd = cat->add_subcommand("build", "build a catalog from tasks and an adapter pool");
  build_cmd->add_option("--tasks", build.tasks, "tasks JSON {\"tasks\": [...]}")->required();
  build_cmd->add_option("--adapters", build.adapters, "adapter pool JSON");
  build_cmd->add_option("--m", build.m, "validation inputs averaged per task representation")->capture_default_str();
  build_cmd->add_option("--seed", build.seed)->capture_default_str();
  build_cmd->add_option("--validation-cap", build.validation_cap)->capture_default_str();
  build_cmd->add_option("--out", build.out)->required();
  build.enc.add_to(build_cmd);

  Pair pair;
  auto* pair_cmd = app.add_subcommand("pair", "pair every task with its best adapter");
  pair_cmd->add_option("--catalog", pair.catalog)->required();
  pair_cmd->add_option("--out", pair.out, "output catalog (default: overwrite --catalog)");
  pair_cmd->add_option("--strategy", pair.strategy, "exhaustive | sh | uniform")->capture_default_str();
  pair_cmd->add_option("--budget", pair.budget, "total budget for uniform selection");
  pair_cmd->add_option("--eta", pair.eta)->capture_default_str();
  pair_cmd->add_option("--gamma", pair.gamma)->capture_default_str();
  pair_cmd->add_option("--warmup", pair.warmup)->capture_default_str();
  pair_cmd->add_option("--base-samples", pair.base_samples)->capture_default_str();
  pair_cmd->add_option("--rounds", pair.rounds, "0 = automatic")->capture_default_str();
  pair_cmd->add_option("--seed", pair.seed)->capture_default_str();
  pair_cmd->add_flag("--only-unpaired", pair.only_unpaired);
  pair.ev.add_to(pair_cmd);

  Route rt;
  auto* route_cmd = app.add_subcommand("route", "route queries to weighted adapter sets");
  route_cmd->add_option("--catalog", rt.catalog)->required();
  route_cmd->add_option("--k", rt.k)->capture_default_str();
  route_cmd->add_option("--temperature", rt.temperature)->capture_default_str();
  route_cmd->add_option("--query", rt.query);
  route_cmd->add_option("--batch", rt.batch, "JSON lines of {query_id, text}");
  route_cmd->add_option("--world", rt.world, "synthetic world spec, for --encoder world");
  rt.enc.add_to(route_cmd);

  Eval ev;
  auto* eval_cmd = app.add_subcommand("eval", "evaluate routed fusion under a regime");
  eval_cmd->add_option("--catalog", ev.catalog)->required();
  eval_cmd->add_option("--regime", ev.regime, "non-ood | semi-ood | ood")->capture_default_str();
  eval_cmd->add_option("--test", ev.test, "test sets JSON {\"test_sets\": {...}}");
  eval_cmd->add_option("--k", ev.k)->capture_default_str();
  eval_cmd->add_option("--temperature", ev.temperature)->capture_default_str();
  eval_cmd->add_option("--report", ev.report, "report path (default: stdout)");
  ev.enc.add_to(eval_cmd);
  ev.ev.add_to(eval_cmd);

  Cluster cl;
  auto* cluster_cmd = app.add_subcommand("cluster", "k-means pseudo-tasks from pooled items");
  cluster_cmd->add_option("--items", cl.items, "JSON lines of {input, target}")->required();
  cluster_cmd->add_option("--k", cl.k)->capture_default_str();
  cluster_cmd->add_option("--seed", cl.seed)->capture_default_str();
  cluster_cmd->add_option("--metric", cl.metric)->capture_default_str();
  cluster_cmd->add_option("--adapters", cl.adapters, "adapter pool to attach");
  cluster_cmd->add_option("--out", cl.out)->required();
  cl.enc.add_to(cluster_cmd);

  Sweep sw;
  auto* sweep_cmd = app.add_subcommand("sweep", "uniform vs Successive Halving budget sweep");
  sweep_cmd->add_option("--world", sw.world, "synthetic world spec")->required();
  sweep_cmd->add_option("--budgets", sw.budgets, "ascending comma-separated budgets")->required();
  sweep_cmd->add_option("--runs", sw.runs)->capture_default_str();
  sweep_cmd->add_option("--seed", sw.seed)->capture_default_str();
  sweep_cmd->add_option("--task", sw.task, "task to sweep (default: first)");
  sweep_cmd->add_option("--base-samples", sw.base_samples, "largest SH base sample count")->capture_default_str();
  sweep_cmd->add_option("--report", sw.report, "report path (default: stdout)");

  WorldExport we;
  auto* world_cmd = app.add_subcommand("world", "write a synthetic world to disk");
  world_cmd->add_option("--spec", we.spec)->required();
  world_cmd->add_option("--out-dir", we.out_dir)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInvalid;
  }

  try {
    if (build_cmd->parsed()) return build.run();
    if (pair_cmd->parsed()) return pair.run();
    if (route_cmd->parsed()) return rt.run();
    if (eval_cmd->parsed()) return ev.run();
    if (cluster_cmd->parsed()) return cl.run();
    if (sweep_cmd->parsed()) return sw.run();
    if (world_cmd->parsed()) return we.run();
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const json::exception& e) {
    std::cerr << "error: malformed JSON content: " << e.what() << "\n";
    return kExitInvalid;
  }
  return 0;
}
