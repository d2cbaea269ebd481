#include "tagrank/wire.hpp"

#include <json.hpp>

#include <arpa/inet.h>
#include <netdb.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <istream>
#include <ostream>

namespace tagrank::wire {

using json = nlohmann::json;

namespace {

[[noreturn]] void unavailable(const std::string& what) {
  throw Error(ErrorCode::kProviderUnavailable, what);
}

// Buffered line I/O over a pair of file descriptors.
class FdChannel : public LineChannel {
 public:
  FdChannel(int read_fd, int write_fd) : read_fd_(read_fd), write_fd_(write_fd) {}

  ~FdChannel() override {
    if (write_fd_ >= 0 && write_fd_ != read_fd_) ::close(write_fd_);
    if (read_fd_ >= 0) ::close(read_fd_);
  }

  void send_line(std::string_view line) override {
    std::string buf(line);
    buf.push_back('\n');
    std::size_t off = 0;
    while (off < buf.size()) {
      const ssize_t n = ::write(write_fd_, buf.data() + off, buf.size() - off);
      if (n < 0) {
        if (errno == EINTR) continue;
        unavailable(std::string("write to provider failed: ") +
                    std::strerror(errno));
      }
      off += static_cast<std::size_t>(n);
    }
  }

  std::optional<std::string> recv_line() override {
    while (true) {
      const auto nl = buffer_.find('\n');
      if (nl != std::string::npos) {
        std::string line = buffer_.substr(0, nl);
        buffer_.erase(0, nl + 1);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return line;
      }
      char chunk[65536];
      const ssize_t n = ::read(read_fd_, chunk, sizeof(chunk));
      if (n < 0) {
        if (errno == EINTR) continue;
        unavailable(std::string("read from provider failed: ") +
                    std::strerror(errno));
      }
      if (n == 0) return std::nullopt;
      buffer_.append(chunk, static_cast<std::size_t>(n));
    }
  }

 protected:
  int read_fd_;
  int write_fd_;
  std::string buffer_;
};

class ChildChannel final : public FdChannel {
 public:
  ChildChannel(int read_fd, int write_fd, pid_t pid)
      : FdChannel(read_fd, write_fd), pid_(pid) {}

  ~ChildChannel() override {
    // Closing stdin lets a well-behaved responder exit on its own.
    if (write_fd_ >= 0) ::close(write_fd_);
    write_fd_ = -1;
    int status = 0;
    ::waitpid(pid_, &status, 0);
  }

 private:
  pid_t pid_;
};

}  // namespace

std::unique_ptr<LineChannel> spawn_stdio(const std::string& command) {
  // A provider that dies mid-write must not kill us with SIGPIPE.
  ::signal(SIGPIPE, SIG_IGN);
  int to_child[2];
  int from_child[2];
  if (::pipe(to_child) != 0) unavailable("pipe() failed");
  if (::pipe(from_child) != 0) {
    ::close(to_child[0]);
    ::close(to_child[1]);
    unavailable("pipe() failed");
  }
  const pid_t pid = ::fork();
  if (pid < 0) unavailable("fork() failed");
  if (pid == 0) {
    ::dup2(to_child[0], STDIN_FILENO);
    ::dup2(from_child[1], STDOUT_FILENO);
    ::close(to_child[0]);
    ::close(to_child[1]);
    ::close(from_child[0]);
    ::close(from_child[1]);
    ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::close(to_child[0]);
  ::close(from_child[1]);
  return std::make_unique<ChildChannel>(from_child[0], to_child[1], pid);
}

std::unique_ptr<LineChannel> connect_tcp(const std::string& host, int port) {
  ::signal(SIGPIPE, SIG_IGN);
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const std::string service = std::to_string(port);
  if (::getaddrinfo(host.c_str(), service.c_str(), &hints, &res) != 0) {
    unavailable("cannot resolve " + host);
  }
  int fd = -1;
  for (addrinfo* p = res; p != nullptr; p = p->ai_next) {
    fd = ::socket(p->ai_family, p->ai_socktype, p->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, p->ai_addr, p->ai_addrlen) == 0) break;
    ::close(fd);
    fd = -1;
  }
  ::freeaddrinfo(res);
  if (fd < 0) unavailable("cannot connect to " + host + ":" + service);
  return std::make_unique<FdChannel>(fd, fd);
}

std::unique_ptr<LineChannel> open_channel(const std::string& address) {
  constexpr std::string_view kStdio = "stdio:";
  constexpr std::string_view kTcp = "tcp:";
  if (address.starts_with(kStdio)) {
    return spawn_stdio(address.substr(kStdio.size()));
  }
  std::string rest = address.starts_with(kTcp) ? address.substr(kTcp.size())
                                               : address;
  const auto colon = rest.rfind(':');
  if (colon == std::string::npos || colon == 0) {
    throw Error(ErrorCode::kInvalidArgument,
                "provider address must be stdio:<cmd> or tcp:<host>:<port>, got \"" +
                    address + "\"");
  }
  int port = 0;
  try {
    port = std::stoi(rest.substr(colon + 1));
  } catch (const std::exception&) {
    throw Error(ErrorCode::kInvalidArgument, "bad port in \"" + address + "\"");
  }
  return connect_tcp(rest.substr(0, colon), port);
}

WireClient::WireClient(std::unique_ptr<LineChannel> channel)
    : channel_(std::move(channel)) {}

std::string WireClient::roundtrip(const std::string& request) {
  channel_->send_line(request);
  auto line = channel_->recv_line();
  if (!line) unavailable("provider closed the connection");
  return std::move(*line);
}

namespace {

json parse_response(const std::string& line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kProviderError,
                std::string("malformed provider response: ") + e.what());
  }
  if (!j.is_object()) {
    throw Error(ErrorCode::kProviderError, "provider response is not an object");
  }
  if (j.contains("error")) {
    throw Error(ErrorCode::kProviderError,
                "provider error: " + j["error"].dump());
  }
  return j;
}

}  // namespace

ProviderInfo WireClient::info() {
  std::lock_guard lock(mu_);
  if (!info_) {
    const json j = parse_response(roundtrip(R"({"op":"info"})"));
    try {
      ProviderInfo info;
      info.name = j.at("name").get<std::string>();
      const auto dim = j.at("dim").get<std::int64_t>();
      if (dim <= 0) throw std::runtime_error("dim must be positive");
      info.dim = static_cast<std::size_t>(dim);
      info.normalizes = j.value("normalizes", false);
      info_ = info;
    } catch (const std::exception& e) {
      throw Error(ErrorCode::kProviderError,
                  std::string("bad info response: ") + e.what());
    }
  }
  return *info_;
}

std::vector<std::vector<float>> WireClient::embed_raw(
    const std::vector<std::string>& texts) {
  std::lock_guard lock(mu_);
  const json req = {{"op", "embed"}, {"texts", texts}};
  const json j = parse_response(roundtrip(req.dump()));
  std::vector<std::vector<float>> out;
  try {
    const auto& vectors = j.at("vectors");
    out.reserve(vectors.size());
    for (const auto& v : vectors) {
      std::vector<float> row;
      row.reserve(v.size());
      for (const auto& x : v) {
        if (!x.is_number()) {
          throw Error(ErrorCode::kNonFiniteValue, "non-numeric vector entry");
        }
        row.push_back(static_cast<float>(x.get<double>()));
      }
      out.push_back(std::move(row));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kProviderError,
                std::string("bad embed response: ") + e.what());
  }
  return out;
}

std::vector<double> WireClient::score(
    const std::vector<std::pair<std::string, std::string>>& pairs) {
  std::lock_guard lock(mu_);
  json arr = json::array();
  for (const auto& [q, d] : pairs) arr.push_back({q, d});
  const json req = {{"op", "score"}, {"pairs", std::move(arr)}};
  const json j = parse_response(roundtrip(req.dump()));
  std::vector<double> out;
  try {
    out = j.at("scores").get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kProviderError,
                std::string("bad score response: ") + e.what());
  }
  if (out.size() != pairs.size()) {
    throw Error(ErrorCode::kProviderError,
                "provider returned " + std::to_string(out.size()) +
                    " scores for " + std::to_string(pairs.size()) + " pairs");
  }
  return out;
}

std::string respond(std::string_view request_line, EmbeddingProvider* embedder,
                    PairScorer* scorer) {
  json reply;
  try {
    const json req = json::parse(request_line);
    const auto op = req.at("op").get<std::string>();
    if (op == "info") {
      if (embedder != nullptr) {
        const auto info = embedder->info();
        reply = {{"name", info.name},
                 {"dim", info.dim},
                 {"normalizes", info.normalizes}};
      } else {
        reply = {{"name", "scorer"}, {"dim", 0}, {"normalizes", false}};
      }
    } else if (op == "embed") {
      if (embedder == nullptr) throw std::runtime_error("embed not supported");
      const auto texts = req.at("texts").get<std::vector<std::string>>();
      reply = {{"vectors", embedder->embed_raw(texts)}};
    } else if (op == "score") {
      if (scorer == nullptr) throw std::runtime_error("score not supported");
      std::vector<std::pair<std::string, std::string>> pairs;
      for (const auto& p : req.at("pairs")) {
        if (!p.is_array() || p.size() != 2) {
          throw std::runtime_error("each pair must be [query, document]");
        }
        pairs.emplace_back(p[0].get<std::string>(), p[1].get<std::string>());
      }
      reply = {{"scores", scorer->score(pairs)}};
    } else {
      throw std::runtime_error("unknown op \"" + op + "\"");
    }
  } catch (const std::exception& e) {
    reply = {{"error", e.what()}};
  }
  return reply.dump();
}

void serve(std::istream& in, std::ostream& out, EmbeddingProvider* embedder,
           PairScorer* scorer) {
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out << respond(line, embedder, scorer) << '\n' << std::flush;
  }
}

}  // namespace tagrank::wire
