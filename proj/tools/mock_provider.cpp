// Speaks the provider wire protocol on stdin/stdout using the mock embedder
// and scorer. Handy for exercising `--encoder stdio:...` without a model.
//
//   mock_provider [--seed N] [--role embedder|scorer|both]
//                 [--bad-dim] [--nan] [--exit-after N]
#include <CLI11.hpp>

#include <iostream>
#include <limits>
#include <string>

#include "tagrank/densevec.hpp"
#include "tagrank/wire.hpp"

namespace {

// Misbehaving embedder for client error-path tests.
class Faulty final : public tagrank::EmbeddingProvider {
 public:
  Faulty(tagrank::EmbeddingProvider& inner, bool bad_dim, bool nan)
      : inner_(inner), bad_dim_(bad_dim), nan_(nan) {}
  tagrank::ProviderInfo info() override { return inner_.info(); }
  std::vector<std::vector<float>> embed_raw(
      const std::vector<std::string>& texts) override {
    auto v = inner_.embed_raw(texts);
    for (auto& row : v) {
      if (bad_dim_) row.resize(5);
      if (nan_ && !row.empty()) row[0] = std::numeric_limits<float>::infinity();
    }
    return v;
  }

 private:
  tagrank::EmbeddingProvider& inner_;
  bool bad_dim_;
  bool nan_;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mock wire-protocol provider"};
  std::uint64_t seed = tagrank::kMockSeed;
  std::string role = "both";
  bool bad_dim = false, nan = false;
  long exit_after = -1;
  app.add_option("--seed", seed);
  app.add_option("--role", role)->check(CLI::IsMember({"embedder", "scorer", "both"}));
  app.add_flag("--bad-dim", bad_dim);
  app.add_flag("--nan", nan);
  app.add_option("--exit-after", exit_after, "answer N requests, then exit");
  CLI11_PARSE(app, argc, argv);

  tagrank::MockProvider provider(seed);
  tagrank::MockScorer scorer(seed);
  Faulty faulty(provider, bad_dim, nan);
  tagrank::EmbeddingProvider* embedder = role == "scorer" ? nullptr : &faulty;
  tagrank::PairScorer* pair_scorer = role == "embedder" ? nullptr : &scorer;

  std::string line;
  long answered = 0;
  while (std::getline(std::cin, line)) {
    if (exit_after >= 0 && answered >= exit_after) return 0;
    if (line.empty()) continue;
    std::cout << tagrank::wire::respond(line, embedder, pair_scorer) << '\n' << std::flush;
    ++answered;
  }
  return 0;
}
