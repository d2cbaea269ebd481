#include "tagrank/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include "tagrank/corpus.hpp"
#include "tagrank/densevec.hpp"
#include "tagrank/error.hpp"
#include "tagrank/eval.hpp"
#include "tagrank/gpl.hpp"
#include "tagrank/pairgen.hpp"
#include "tagrank/ranker.hpp"
#include "tagrank/rng.hpp"
#include "tagrank/wire.hpp"

namespace tagrank::cli {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

constexpr const char* kAddrEnv = "DR_PROVIDER_ADDR";

// Usage problems detected after CLI11 parsing; mapped to exit code 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Owns whatever an encoder/scorer spec needs: "tfidf", "mock", "mock:<seed>",
// "wire" (address from DR_PROVIDER_ADDR), "stdio:<cmd>", "tcp:<host>:<port>".
struct Backend {
  std::string name;
  std::unique_ptr<MockProvider> mock;
  std::unique_ptr<MockScorer> mock_scorer;
  std::unique_ptr<wire::WireClient> client;
  std::unique_ptr<CachingProvider> cache;
  bool sparse = false;

  Encoder encoder() const {
    if (sparse) return TfIdfEncoder{};
    return DenseEncoder{cache.get()};
  }

  EmbeddingProvider& provider() const {
    if (sparse) throw UsageError("encoder \"" + name + "\" is not dense");
    return *cache;
  }

  PairScorer& scorer() const {
    if (mock_scorer) return *mock_scorer;
    if (client) return *client;
    throw UsageError("\"" + name + "\" cannot score pairs");
  }
};

std::string resolve_address(const std::string& spec) {
  if (spec != "wire") return spec;
  const char* env = std::getenv(kAddrEnv);
  if (env == nullptr || *env == '\0') {
    throw UsageError(std::string("encoder \"wire\" needs ") + kAddrEnv);
  }
  return env;
}

std::unique_ptr<Backend> open_backend(const std::string& spec, bool for_scoring) {
  auto b = std::make_unique<Backend>();
  b->name = spec;
  if (spec == "tfidf") {
    if (for_scoring) throw UsageError("tfidf cannot act as a pair scorer");
    b->sparse = true;
    return b;
  }
  if (spec == "mock" || spec.starts_with("mock:")) {
    std::uint64_t seed = kMockSeed;
    if (spec != "mock") {
      try {
        seed = std::stoull(spec.substr(5), nullptr, 0);
      } catch (const std::exception&) {
        throw UsageError("bad mock seed in \"" + spec + "\"");
      }
    }
    b->mock = std::make_unique<MockProvider>(seed);
    b->mock_scorer = std::make_unique<MockScorer>(seed);
    b->cache = std::make_unique<CachingProvider>(*b->mock);
    return b;
  }
  const std::string address = resolve_address(spec);
  if (!address.starts_with("stdio:") && !address.starts_with("tcp:") &&
      address.find(':') == std::string::npos) {
    throw UsageError("unknown encoder \"" + spec + "\"");
  }
  b->client = std::make_unique<wire::WireClient>(wire::open_channel(address));
  b->cache = std::make_unique<CachingProvider>(*b->client);
  return b;
}

// Prefixes errors from reading `path` with the file name (and line).
template <typename F>
auto reading(const std::string& path, F&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Error& e) {
    throw Error(e.code(), path + ": " + e.what(), e.line());
  }
}

std::vector<Track> corpus_from(const std::string& path) {
  return reading(path, [&] { return load_corpus(path); });
}

std::vector<RequestPair> pairs_from(const std::string& path) {
  return reading(path, [&] { return load_pairs(path); });
}

// Writes through a temporary sibling so a failed run leaves no partial file.
void write_file(const std::string& path, const std::function<void(std::ostream&)>& body) {
  const fs::path target(path);
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw Error(ErrorCode::kIo, "cannot write " + path);
    body(f);
    if (!f) throw Error(ErrorCode::kIo, "write failed for " + path);
  }
  fs::rename(tmp, target);
}

void emit(const std::string& path, std::ostream& out,
          const std::function<void(std::ostream&)>& body) {
  if (path.empty() || path == "-") {
    body(out);
  } else {
    write_file(path, body);
  }
}

void guard_outputs(const std::vector<std::string>& inputs, const std::string& output) {
  if (output.empty() || output == "-") return;
  for (const auto& in : inputs) {
    if (in.empty()) continue;
    std::error_code ec;
    if (in == output || fs::equivalent(in, output, ec)) {
      throw UsageError("output " + output + " would overwrite input " + in);
    }
  }
}

std::vector<std::string> unique_keys(const std::vector<RequestPair>& pairs) {
  std::vector<std::string> keys;
  keys.reserve(pairs.size());
  for (const auto& p : pairs) keys.push_back(p.descriptor_set.key());
  return keys;
}

std::vector<std::string> keys_of(const std::vector<Track>& corpus) {
  std::vector<std::string> keys;
  keys.reserve(corpus.size());
  for (const auto& t : corpus) keys.push_back(make_descriptor_set(t.descriptors).key());
  return keys;
}

json ranked_json(const std::string& request, const std::vector<Ranked>& ranked) {
  json results = json::array();
  for (const auto& r : ranked) results.push_back({{"key", r.key}, {"score", r.score}});
  json j;
  j["request"] = request;
  j["results"] = std::move(results);
  return j;
}

struct MinedQuery {
  std::string query;
  std::string pos;
  std::vector<std::string> negs;
  std::string track_id;
  int variation = 0;
};

std::string mined_line(const MinedQuery& m) {
  json j;
  j["query"] = m.query;
  j["pos"] = m.pos;
  j["negs"] = m.negs;
  j["track_id"] = m.track_id;
  j["variation"] = m.variation;
  return j.dump();
}

std::vector<MinedQuery> read_mined(const std::string& path) {
  return reading(path, [&] {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
    std::vector<MinedQuery> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      try {
        const json j = json::parse(line);
        out.push_back({j.at("query").get<std::string>(), j.at("pos").get<std::string>(),
                       j.at("negs").get<std::vector<std::string>>(),
                       j.value("track_id", std::string()), j.value("variation", 0)});
      } catch (const std::exception& e) {
        throw Error(ErrorCode::kParseError,
                    "line " + std::to_string(line_no) + ": " + e.what(), line_no);
      }
    }
    return out;
  });
}

std::vector<std::unique_ptr<Backend>> open_retrievers(const std::vector<std::string>& specs) {
  std::vector<std::unique_ptr<Backend>> out;
  for (const auto& s : specs) out.push_back(open_backend(s, false));
  return out;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Descriptor-set retrieval: pair generation, GPL triples and Recall@k evaluation",
               "tagrank"};
  app.require_subcommand(1);
  app.set_config("--config", "", "key=value config file; flags win");

  std::string corpus_path, pairs_path, out_path, index_path, mined_path, samples_out;
  std::string encoder_spec = "tfidf", scorer_spec = "mock";
  std::vector<std::string> retriever_specs = {"tfidf", "mock"};
  std::vector<std::string> requests;
  std::string requests_file;
  std::uint64_t seed = 0;
  std::size_t k = kRecallK, samples = kTestSamples;
  std::size_t per_retriever_k = kNegativesPerRetriever, total = kNegativesPerQuery;
  bool table = false;

  auto* ingest = app.add_subcommand("ingest", "Validate a corpus and optionally write it normalized");
  ingest->add_option("--corpus", corpus_path, "corpus JSONL")->required();
  ingest->add_option("--out", out_path, "normalized corpus JSONL");

  auto* pairs = app.add_subcommand("pairs", "Generate (request, descriptor set) pairs");
  pairs->add_option("--corpus", corpus_path, "corpus JSONL")->required();
  pairs->add_option("--seed", seed, "sampling seed")->required();
  pairs->add_option("--out", out_path, "pairs JSONL (default stdout)");

  auto* stats = app.add_subcommand("stats", "Request/key counts and shared-word ratio of a pairs file");
  stats->add_option("--pairs", pairs_path, "pairs JSONL")->required();
  stats->add_option("--out", out_path, "stats JSON (default stdout)");

  auto* index = app.add_subcommand("index", "Embed unique descriptor keys into a DVEC matrix");
  auto* idx_src = index->add_option_group("source");
  idx_src->add_option("--pairs", pairs_path, "pairs JSONL");
  idx_src->add_option("--corpus", corpus_path, "corpus JSONL");
  idx_src->require_option(1);
  index->add_option("--encoder", encoder_spec, "mock | mock:<seed> | wire | stdio:<cmd> | tcp:<host>:<port> | tfidf");
  index->add_option("--out", out_path, "DVEC file (tfidf: model dump JSON)")->required();

  auto* rankc = app.add_subcommand("rank", "Rank descriptor keys for requests");
  auto* rank_src = rankc->add_option_group("source");
  rank_src->add_option("--index", index_path, "DVEC matrix built with the same encoder");
  rank_src->add_option("--pairs", pairs_path, "pairs JSONL");
  rank_src->add_option("--corpus", corpus_path, "corpus JSONL");
  rank_src->require_option(1);
  rankc->add_option("--encoder", encoder_spec, "encoder spec");
  rankc->add_option("--request", requests, "request text (repeatable)");
  rankc->add_option("--requests", requests_file, "file with one request per line");
  rankc->add_option("--k", k, "results per request")->check(CLI::PositiveNumber);
  rankc->add_option("--out", out_path, "results JSONL (default stdout)");

  auto* mine = app.add_subcommand("mine", "Mine hard negatives for every pair");
  mine->add_option("--pairs", pairs_path, "pairs JSONL; also the mining universe")->required();
  mine->add_option("--retriever", retriever_specs, "mining encoder (repeatable)");
  mine->add_option("--per-retriever-k", per_retriever_k, "negatives taken from each retriever");
  mine->add_option("--total", total, "negatives kept per query")->check(CLI::PositiveNumber);
  mine->add_option("--out", out_path, "mined JSONL (default stdout)");

  auto* label = app.add_subcommand("label", "Margin-label mined negatives into triples");
  label->add_option("--mined", mined_path, "output of `mine`")->required();
  label->add_option("--scorer", scorer_spec, "mock | mock:<seed> | wire | stdio:<cmd> | tcp:<host>:<port>");
  label->add_option("--seed", seed, "shuffle seed")->required();
  label->add_option("--out", out_path, "triples JSONL (default stdout)");

  auto* triples = app.add_subcommand("triples", "Mine and label in one pass");
  triples->add_option("--pairs", pairs_path, "pairs JSONL")->required();
  triples->add_option("--retriever", retriever_specs, "mining encoder (repeatable)");
  triples->add_option("--scorer", scorer_spec, "scorer spec");
  triples->add_option("--per-retriever-k", per_retriever_k, "negatives taken from each retriever");
  triples->add_option("--total", total, "negatives kept per query")->check(CLI::PositiveNumber);
  triples->add_option("--seed", seed, "shuffle seed")->required();
  triples->add_option("--out", out_path, "triples JSONL (default stdout)");

  auto* evalc = app.add_subcommand("eval", "Recall@k over resampled test sets");
  auto* eval_src = evalc->add_option_group("source");
  eval_src->add_option("--corpus", corpus_path, "corpus JSONL");
  eval_src->add_option("--pairs", pairs_path, "pairs JSONL (e.g. rephrased requests)");
  eval_src->require_option(1);
  evalc->add_option("--encoder", encoder_spec, "encoder spec");
  evalc->add_option("--seed", seed, "sampling seed")->required();
  evalc->add_option("--k", k, "recall cutoff")->check(CLI::PositiveNumber);
  evalc->add_option("--samples", samples, "number of test samples")->check(CLI::PositiveNumber);
  evalc->add_option("--out", out_path, "report JSON (default stdout)");
  evalc->add_option("--samples-out", samples_out, "write the sampled test sets as JSONL");
  evalc->add_flag("--table", table, "also print a plain-text table to stderr");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "tagrank: " << e.what() << "\n";
    auto subs = app.get_subcommands();
    err << (subs.empty() ? app.help() : subs.front()->help());
    return 2;
  }

  auto print_seed = [&] { err << "seed: " << seed << "\n"; };

  try {
    const std::vector<std::string> inputs = {corpus_path, pairs_path, index_path,
                                             mined_path, requests_file};
    guard_outputs(inputs, out_path);
    guard_outputs(inputs, samples_out);

    if (*ingest) {
      const auto corpus = corpus_from(corpus_path);
      std::size_t keys = 0;
      {
        auto all = keys_of(corpus);
        std::sort(all.begin(), all.end());
        keys = static_cast<std::size_t>(std::unique(all.begin(), all.end()) - all.begin());
      }
      if (!out_path.empty()) {
        write_file(out_path, [&](std::ostream& f) {
          for (const auto& t : corpus) {
            Track norm = t;
            norm.descriptors = make_descriptor_set(t.descriptors).items();
            f << corpus_line(norm) << '\n';
          }
        });
      }
      err << "tracks: " << corpus.size() << ", unique keys: " << keys << "\n";
    } else if (*pairs) {
      print_seed();
      const auto corpus = corpus_from(corpus_path);
      const auto generated = generate_pairs(corpus, seed);
      emit(out_path, out, [&](std::ostream& f) { write_pairs(f, generated); });
      err << "pairs: " << generated.size() << "\n";
    } else if (*stats) {
      const auto s = dataset_stats(pairs_from(pairs_path));
      json j;
      j["n_requests"] = s.n_requests;
      j["n_unique_keys"] = s.n_unique_keys;
      j["mean_shared_ratio"] = s.mean_shared_ratio;
      emit(out_path, out, [&](std::ostream& f) { f << j.dump(2) << '\n'; });
    } else if (*index) {
      const auto keys = !pairs_path.empty() ? unique_keys(pairs_from(pairs_path))
                                            : keys_of(corpus_from(corpus_path));
      auto backend = open_backend(encoder_spec, false);
      if (backend->sparse) {
        std::vector<std::string> sorted = keys;
        std::sort(sorted.begin(), sorted.end());
        sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
        const TfIdfModel model = fit(sorted);
        write_file(out_path, [&](std::ostream& f) { f << model.dump_json() << '\n'; });
        err << "tfidf vocabulary: " << model.vocabulary_size() << "\n";
      } else {
        const DescriptorIndex built = build_index_from_keys(keys, backend->encoder());
        const EmbeddingMatrix m = built.matrix();
        const std::string bytes = encode_matrix(m);
        write_file(out_path, [&](std::ostream& f) {
          f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        });
        err << "indexed keys: " << m.size() << ", dim: " << m.dim() << "\n";
      }
    } else if (*rankc) {
      if (!requests_file.empty()) {
        std::ifstream in(requests_file);
        if (!in) throw Error(ErrorCode::kIo, "cannot open " + requests_file);
        for (std::string line; std::getline(in, line);) {
          if (!line.empty()) requests.push_back(line);
        }
      }
      if (requests.empty()) throw UsageError("rank needs --request or --requests");
      auto backend = open_backend(encoder_spec, false);
      std::optional<DescriptorIndex> built;
      if (!index_path.empty()) {
        const auto m = reading(index_path, [&] { return load_matrix(index_path); });
        built = DescriptorIndex::from_matrix(m, backend->provider());
      } else {
        const auto keys = !pairs_path.empty() ? unique_keys(pairs_from(pairs_path))
                                              : keys_of(corpus_from(corpus_path));
        built = build_index_from_keys(keys, backend->encoder());
      }
      const auto ranked = rank_batch(requests, *built, k);
      emit(out_path, out, [&](std::ostream& f) {
        for (std::size_t i = 0; i < requests.size(); ++i) {
          f << ranked_json(requests[i], ranked[i]).dump() << '\n';
        }
      });
    } else if (*mine) {
      const auto train = pairs_from(pairs_path);
      const auto backends = open_retrievers(retriever_specs);
      std::vector<DescriptorIndex> indexes;
      for (const auto& b : backends) {
        indexes.push_back(build_index_from_keys(unique_keys(train), b->encoder()));
      }
      std::vector<const DescriptorIndex*> views;
      for (const auto& i : indexes) views.push_back(&i);
      emit(out_path, out, [&](std::ostream& f) {
        for (const auto& p : train) {
          MinedQuery m{p.request, p.descriptor_set.key(),
                       mine_negatives(p.request, p.descriptor_set.key(), views,
                                      per_retriever_k, total),
                       p.track_id, p.variation};
          f << mined_line(m) << '\n';
        }
      });
    } else if (*label) {
      print_seed();
      const auto mined = read_mined(mined_path);
      auto backend = open_backend(scorer_spec, true);
      std::vector<TrainingTriple> labeled;
      std::size_t skipped = 0;
      for (const auto& m : mined) {
        if (m.negs.empty()) {
          ++skipped;
          continue;
        }
        for (const auto& neg : m.negs) {
          if (neg == m.pos) continue;
          labeled.push_back({m.query, m.pos, neg,
                             margin_label(m.query, m.pos, neg, backend->scorer())});
        }
      }
      Rng rng(seed);
      rng.shuffle(labeled);
      emit(out_path, out, [&](std::ostream& f) { write_triples(f, labeled); });
      err << "triples: " << labeled.size() << ", skipped queries: " << skipped << "\n";
    } else if (*triples) {
      print_seed();
      const auto train = pairs_from(pairs_path);
      const auto backends = open_retrievers(retriever_specs);
      auto scorer_backend = open_backend(scorer_spec, true);
      std::vector<DescriptorIndex> indexes;
      for (const auto& b : backends) {
        indexes.push_back(build_index_from_keys(unique_keys(train), b->encoder()));
      }
      std::vector<const DescriptorIndex*> views;
      for (const auto& i : indexes) views.push_back(&i);
      const auto batch = generate_triples(train, views, scorer_backend->scorer(),
                                          {total, per_retriever_k, seed});
      emit(out_path, out, [&](std::ostream& f) { write_triples(f, batch.triples); });
      err << "triples: " << batch.triples.size()
          << ", skipped pairs: " << batch.skipped_pairs << "\n";
    } else if (*evalc) {
      print_seed();
      const auto sets = !corpus_path.empty()
                            ? make_test_samples(corpus_from(corpus_path), samples, seed)
                            : test_samples_from_pairs(pairs_from(pairs_path), samples, seed);
      if (!samples_out.empty()) {
        write_file(samples_out, [&](std::ostream& f) { write_test_samples(f, sets); });
      }
      auto backend = open_backend(encoder_spec, false);
      const EvalReport report = evaluate(backend->encoder(), sets, k);
      emit(out_path, out, [&](std::ostream& f) {
        f << report_json(report, encoder_spec) << '\n';
      });
      if (table) err << report_table(report, encoder_spec);
    }
  } catch (const UsageError& e) {
    err << "tagrank: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    err << "tagrank: " << to_string(e.code()) << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "tagrank: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace tagrank::cli
