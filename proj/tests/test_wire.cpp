#include "tagrank/wire.hpp"

#include <gtest/gtest.h>
#include <json.hpp>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <random>
#include <thread>

#include "tagrank/ranker.hpp"

namespace tagrank::wire {
namespace {

std::string provider_cmd(const std::string& flags = "") {
  return std::string("stdio:") + MOCK_PROVIDER_BIN + " " + flags;
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorCode::kInvalidArgument;
}

TEST(Respond, Info) {
  MockProvider mock;
  const auto j = nlohmann::json::parse(respond(R"({"op":"info"})", &mock, nullptr));
  EXPECT_EQ(j["name"], "mock");
  EXPECT_EQ(j["dim"], 64);
  EXPECT_EQ(j["normalizes"], true);
}

TEST(Respond, ErrorsAreLines) {
  MockProvider mock;
  MockScorer scorer;
  EXPECT_TRUE(nlohmann::json::parse(respond(R"({"op":"score","pairs":[["a","b"]]})", &mock,
                                            nullptr))
                  .contains("error"));
  EXPECT_TRUE(nlohmann::json::parse(respond(R"({"op":"embed","texts":["a"]})", nullptr,
                                            &scorer))
                  .contains("error"));
  EXPECT_TRUE(nlohmann::json::parse(respond("not json", &mock, &scorer)).contains("error"));
  EXPECT_TRUE(nlohmann::json::parse(respond(R"({"op":"nope"})", &mock, &scorer))
                  .contains("error"));
  EXPECT_TRUE(nlohmann::json::parse(respond(R"({"op":"score","pairs":[["a"]]})", &mock,
                                            &scorer))
                  .contains("error"));
}

TEST(StdioClient, HandshakeAndEmbedMatchMock) {
  WireClient client(open_channel(provider_cmd()));
  const auto info = client.info();
  EXPECT_EQ(info.dim, 64u);
  EXPECT_EQ(info.name, "mock");
  const std::vector<std::string> texts = {"sad piano", "pop", "", "k-pop r&b"};
  const auto wire = embed(client, texts);
  MockProvider local;
  const auto direct = embed(local, texts);
  EXPECT_EQ(wire.rows(), direct.rows());
}

TEST(StdioClient, ScoresMatchMockScorer) {
  WireClient client(open_channel(provider_cmd()));
  MockScorer local;
  const std::vector<std::pair<std::string, std::string>> pairs = {
      {"slow sad piano", "piano, sad"}, {"fast drums", "ambient"}, {"", "pop"}};
  EXPECT_EQ(client.score(pairs), local.score(pairs));
}

TEST(StdioClient, DimMismatch) {
  WireClient client(open_channel(provider_cmd("--bad-dim")));
  EXPECT_EQ(code_of([&] { embed(client, {"a"}); }), ErrorCode::kDimMismatch);
}

TEST(StdioClient, NonFiniteValue) {
  WireClient client(open_channel(provider_cmd("--nan")));
  EXPECT_EQ(code_of([&] { embed(client, {"a"}); }), ErrorCode::kNonFiniteValue);
}

TEST(StdioClient, UnsupportedOpIsProviderError) {
  WireClient client(open_channel(provider_cmd("--role embedder")));
  EXPECT_EQ(code_of([&] { client.score({{"a", "b"}}); }), ErrorCode::kProviderError);
  // The connection stays usable after an error line.
  EXPECT_EQ(embed(client, {"a"}).size(), 1u);
}

TEST(StdioClient, ProviderExitIsUnavailable) {
  WireClient client(open_channel(provider_cmd("--exit-after 1")));
  EXPECT_EQ(client.info().dim, 64u);
  EXPECT_EQ(code_of([&] { embed(client, {"a"}); }), ErrorCode::kProviderUnavailable);
}

TEST(StdioClient, MissingCommandIsUnavailable) {
  WireClient client(open_channel("stdio:/nonexistent/provider-binary 2>/dev/null"));
  EXPECT_EQ(code_of([&] { client.info(); }), ErrorCode::kProviderUnavailable);
}

TEST(StdioClient, ConcurrentCallersAreSerialized) {
  WireClient client(open_channel(provider_cmd()));
  MockProvider local;
  std::atomic<int> mismatches{0};
  std::vector<std::thread> threads;
  for (int t = 0; t < 4; ++t) {
    threads.emplace_back([&, t] {
      for (int i = 0; i < 25; ++i) {
        const std::string text = "t" + std::to_string(t) + " i" + std::to_string(i);
        if (embed(client, {text}).rows() != embed(local, {text}).rows()) ++mismatches;
      }
    });
  }
  for (auto& th : threads) th.join();
  EXPECT_EQ(mismatches.load(), 0);
}

TEST(StdioClient, MixedSessionStaysInOrder) {
  WireClient client(open_channel(provider_cmd()));
  MockProvider local;
  MockScorer local_scorer;
  std::mt19937 gen(8);
  const std::vector<std::string> words = {"pop", "sad", "jazz", "drums", "lo-fi", "calm"};
  for (int i = 0; i < 100; ++i) {
    const std::string a = words[gen() % words.size()] + " " + words[gen() % words.size()];
    const std::string b = words[gen() % words.size()];
    switch (gen() % 3) {
      case 0:
        EXPECT_EQ(client.info().dim, 64u);
        break;
      case 1:
        EXPECT_EQ(embed(client, {a, b}).rows(), embed(local, {a, b}).rows());
        break;
      default:
        EXPECT_EQ(client.score({{a, b}}), local_scorer.score({{a, b}}));
    }
  }
}

TEST(StdioClient, DenseIndexThroughWireMatchesLocal) {
  WireClient client(open_channel(provider_cmd()));
  MockProvider local;
  const std::vector<std::string> keys = {"pop", "sad, slow", "ambient, calm", "drums, fast"};
  const auto wire_index = build_index_from_keys(keys, DenseEncoder{&client});
  const auto local_index = build_index_from_keys(keys, DenseEncoder{&local});
  EXPECT_EQ(rank("slow sad song", wire_index, 4), rank("slow sad song", local_index, 4));
}

// Minimal TCP responder: accepts one connection and answers with respond().
class TcpServer {
 public:
  TcpServer() {
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = 0;
    ::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr));
    ::listen(fd_, 1);
    socklen_t len = sizeof(addr);
    ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
    thread_ = std::thread([this] { loop(); });
  }

  ~TcpServer() {
    thread_.join();
    ::close(fd_);
  }

  int port() const { return port_; }

 private:
  void loop() {
    const int conn = ::accept(fd_, nullptr, nullptr);
    if (conn < 0) return;
    std::string buffer;
    char chunk[4096];
    while (true) {
      const ssize_t n = ::read(conn, chunk, sizeof(chunk));
      if (n <= 0) break;
      buffer.append(chunk, static_cast<std::size_t>(n));
      for (auto nl = buffer.find('\n'); nl != std::string::npos; nl = buffer.find('\n')) {
        const std::string reply = respond(buffer.substr(0, nl), &mock_, &scorer_) + "\n";
        buffer.erase(0, nl + 1);
        if (::write(conn, reply.data(), reply.size()) < 0) break;
      }
    }
    ::close(conn);
  }

  int fd_ = -1;
  int port_ = 0;
  MockProvider mock_;
  MockScorer scorer_;
  std::thread thread_;
};

TEST(TcpClient, RoundTrip) {
  TcpServer server;
  {
    WireClient client(open_channel("tcp:127.0.0.1:" + std::to_string(server.port())));
    EXPECT_EQ(client.info().dim, 64u);
    MockProvider local;
    EXPECT_EQ(embed(client, {"sad pop"}).rows(), embed(local, {"sad pop"}).rows());
    MockScorer local_scorer;
    EXPECT_EQ(client.score({{"a", "b"}}), local_scorer.score({{"a", "b"}}));
  }
}

TEST(TcpClient, BareHostPortAddress) {
  TcpServer server;
  {
    WireClient client(open_channel("127.0.0.1:" + std::to_string(server.port())));
    EXPECT_EQ(client.info().dim, 64u);
  }
}

TEST(TcpClient, RefusedIsUnavailable) {
  // Grab a free port, then close it so nothing listens there.
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  ::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr));
  socklen_t len = sizeof(addr);
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
  const int port = ntohs(addr.sin_port);
  ::close(fd);
  EXPECT_EQ(code_of([&] { open_channel("tcp:127.0.0.1:" + std::to_string(port)); }),
            ErrorCode::kProviderUnavailable);
}

TEST(OpenChannel, BadAddress) {
  EXPECT_EQ(code_of([] { open_channel("nonsense"); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(code_of([] { open_channel("tcp:host:notaport"); }), ErrorCode::kInvalidArgument);
}

}  // namespace
}  // namespace tagrank::wire
