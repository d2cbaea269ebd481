#include "tagrank/densevec.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <unordered_set>

#include "tagrank/rng.hpp"
#include "tagrank/tfidf.hpp"

namespace tagrank {

EmbeddingMatrix embed(EmbeddingProvider& provider,
                      const std::vector<std::string>& texts) {
  if (texts.empty()) throw Error(ErrorCode::kEmptyInput, "nothing to embed");
  const ProviderInfo info = provider.info();
  if (info.dim == 0) {
    throw Error(ErrorCode::kDimMismatch, "provider reports dim 0");
  }
  const auto vectors = provider.embed_raw(texts);
  if (vectors.size() != texts.size()) {
    throw Error(ErrorCode::kProviderError,
                "provider returned " + std::to_string(vectors.size()) +
                    " vectors for " + std::to_string(texts.size()) + " texts");
  }
  EmbeddingMatrix::Rows rows(static_cast<Eigen::Index>(texts.size()),
                             static_cast<Eigen::Index>(info.dim));
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    if (vectors[i].size() != info.dim) {
      throw Error(ErrorCode::kDimMismatch,
                  "vector " + std::to_string(i) + " has " +
                      std::to_string(vectors[i].size()) + " values, expected " +
                      std::to_string(info.dim));
    }
    for (std::size_t j = 0; j < info.dim; ++j) {
      const float x = vectors[i][j];
      if (!std::isfinite(x)) {
        throw Error(ErrorCode::kNonFiniteValue,
                    "non-finite value in vector " + std::to_string(i));
      }
      rows(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = x;
    }
  }
  return EmbeddingMatrix(texts, std::move(rows));
}

namespace {

// Unit vector for one token: SplitMix64 stream seeded from the token bytes,
// each draw mapped to [-1, 1).
std::vector<double> token_direction(std::string_view token, std::uint64_t seed) {
  std::vector<double> v(kMockDim);
  std::uint64_t state = fnv1a64(token) ^ seed;
  double sq = 0.0;
  for (auto& x : v) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    z ^= z >> 31;
    x = 2.0 * (static_cast<double>(z >> 11) * 0x1.0p-53) - 1.0;
    sq += x * x;
  }
  const double norm = std::sqrt(sq);
  for (auto& x : v) x /= norm;
  return v;
}

}  // namespace

Eigen::VectorXf mock_embed(std::string_view text, std::uint64_t seed) {
  auto tokens = tokenize(text);
  Eigen::VectorXf out = Eigen::VectorXf::Zero(kMockDim);
  if (tokens.empty()) return out;
  std::sort(tokens.begin(), tokens.end());
  std::vector<double> acc(kMockDim, 0.0);
  for (const auto& tok : tokens) {
    const auto dir = token_direction(tok, seed);
    for (std::size_t j = 0; j < kMockDim; ++j) acc[j] += dir[j];
  }
  const double n = static_cast<double>(tokens.size());
  double sq = 0.0;
  for (auto& x : acc) {
    x /= n;
    sq += x * x;
  }
  if (sq == 0.0) return out;
  const double norm = std::sqrt(sq);
  for (std::size_t j = 0; j < kMockDim; ++j) {
    out[static_cast<Eigen::Index>(j)] = static_cast<float>(acc[j] / norm);
  }
  return out;
}

ProviderInfo MockProvider::info() {
  return {seed_ == kMockSeed ? "mock" : "mock:" + std::to_string(seed_),
          kMockDim, true};
}

std::vector<std::vector<float>> MockProvider::embed_raw(
    const std::vector<std::string>& texts) {
  std::vector<std::vector<float>> out;
  out.reserve(texts.size());
  for (const auto& t : texts) {
    const Eigen::VectorXf v = mock_embed(t, seed_);
    out.emplace_back(v.data(), v.data() + v.size());
  }
  return out;
}

std::vector<double> MockScorer::score(
    const std::vector<std::pair<std::string, std::string>>& pairs) {
  std::vector<double> out;
  out.reserve(pairs.size());
  for (const auto& [query, doc] : pairs) {
    const Eigen::VectorXf a = mock_embed(query, seed_);
    const Eigen::VectorXf b = mock_embed(doc, seed_);
    double s = 0.0;
    for (Eigen::Index j = 0; j < a.size(); ++j) {
      s += static_cast<double>(a[j]) * static_cast<double>(b[j]);
    }
    out.push_back(s);
  }
  return out;
}

ProviderInfo CachingProvider::info() { return inner_.info(); }

std::size_t CachingProvider::cached() const {
  std::lock_guard lock(mu_);
  return cache_.size();
}

std::vector<std::vector<float>> CachingProvider::embed_raw(
    const std::vector<std::string>& texts) {
  std::lock_guard lock(mu_);
  std::vector<std::string> missing;
  std::unordered_set<std::string> pending;
  for (const auto& t : texts) {
    if (!cache_.contains(t) && pending.insert(t).second) missing.push_back(t);
  }
  if (!missing.empty()) {
    auto fresh = inner_.embed_raw(missing);
    if (fresh.size() != missing.size()) {
      throw Error(ErrorCode::kProviderError,
                  "provider returned a short batch");
    }
    misses_ += missing.size();
    for (std::size_t i = 0; i < missing.size(); ++i) {
      cache_.emplace(std::move(missing[i]), std::move(fresh[i]));
    }
  }
  std::vector<std::vector<float>> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(cache_.at(t));
  return out;
}

namespace {

constexpr char kMagic[4] = {'D', 'V', 'E', 'C'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put_le(std::string& out, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<char>((value >> (8 * i)) & 0xff));
  }
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  template <typename T>
  T get_le(const char* what) {
    need(sizeof(T), what);
    T value = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      value |= static_cast<T>(static_cast<unsigned char>(bytes_[pos_ + i]))
               << (8 * i);
    }
    pos_ += sizeof(T);
    return value;
  }

  std::string_view take(std::size_t n, const char* what) {
    need(n, what);
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n, const char* what) {
    if (remaining() < n) {
      throw Error(ErrorCode::kTruncatedFile,
                  std::string("file ends inside ") + what);
    }
  }
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_matrix(const EmbeddingMatrix& m) {
  if (m.dim() == 0) throw Error(ErrorCode::kInvalidArgument, "dim must be > 0");
  std::unordered_set<std::string_view> seen;
  for (const auto& id : m.ids()) {
    if (!seen.insert(id).second) {
      throw Error(ErrorCode::kInvalidArgument, "duplicate id \"" + id + "\"");
    }
  }
  if (!m.all_finite()) {
    throw Error(ErrorCode::kNonFiniteValue, "matrix has non-finite values");
  }
  std::string out(kMagic, sizeof(kMagic));
  put_le<std::uint32_t>(out, kVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(m.dim()));
  put_le<std::uint64_t>(out, m.size());
  for (const auto& id : m.ids()) {
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(id.size()));
    out += id;
  }
  const auto& rows = m.rows();
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    for (Eigen::Index j = 0; j < rows.cols(); ++j) {
      put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(rows(i, j)));
    }
  }
  return out;
}

EmbeddingMatrix decode_matrix(std::string_view bytes) {
  if (bytes.size() < sizeof(kMagic) ||
      std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw Error(ErrorCode::kBadMagic, "not a DVEC file");
  }
  Reader r(bytes.substr(sizeof(kMagic)));
  const auto version = r.get_le<std::uint32_t>("header");
  if (version != kVersion) {
    throw Error(ErrorCode::kUnsupportedVersion,
                "DVEC version " + std::to_string(version));
  }
  const auto dim = r.get_le<std::uint32_t>("header");
  const auto count = r.get_le<std::uint64_t>("header");
  if (dim == 0) throw Error(ErrorCode::kInvalidArgument, "DVEC dim is 0");
  std::vector<std::string> ids;
  std::unordered_set<std::string> seen;
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto len = r.get_le<std::uint32_t>("id table");
    std::string id(r.take(len, "id table"));
    if (!seen.insert(id).second) {
      throw Error(ErrorCode::kInvalidArgument, "duplicate id \"" + id + "\"");
    }
    ids.push_back(std::move(id));
  }
  const std::size_t payload = static_cast<std::size_t>(count) * dim * 4;
  if (r.remaining() < payload) {
    throw Error(ErrorCode::kTruncatedFile,
                "header declares " + std::to_string(count) +
                    " rows but the row data is short");
  }
  if (r.remaining() > payload) {
    throw Error(ErrorCode::kIdCountMismatch,
                "trailing bytes after " + std::to_string(count) + " rows");
  }
  EmbeddingMatrix::Rows rows(static_cast<Eigen::Index>(count),
                             static_cast<Eigen::Index>(dim));
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    for (Eigen::Index j = 0; j < rows.cols(); ++j) {
      rows(i, j) = std::bit_cast<float>(r.get_le<std::uint32_t>("rows"));
    }
  }
  if (!rows.allFinite()) {
    throw Error(ErrorCode::kNonFiniteValue, "DVEC rows have non-finite values");
  }
  return EmbeddingMatrix(std::move(ids), std::move(rows));
}

void save_matrix(const EmbeddingMatrix& m, const std::filesystem::path& path) {
  const std::string bytes = encode_matrix(m);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path.string());
}

EmbeddingMatrix load_matrix(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());
  return decode_matrix(bytes);
}

}  // namespace tagrank
