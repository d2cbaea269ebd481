#pragma once

#include <iosfwd>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tagrank/densevec.hpp"

// Newline-delimited JSON protocol spoken with model providers:
//   {"op":"info"}                      -> {"name","dim","normalizes"}
//   {"op":"embed","texts":[...]}       -> {"vectors":[[...],...]}
//   {"op":"score","pairs":[[q,d],...]} -> {"scores":[...]}
// Failures come back as {"error": "..."}. Responses arrive in request order.
namespace tagrank::wire {

class LineChannel {
 public:
  virtual ~LineChannel() = default;
  virtual void send_line(std::string_view line) = 0;
  // nullopt on end of stream.
  virtual std::optional<std::string> recv_line() = 0;
};

// Runs `command` under /bin/sh and talks to its stdin/stdout.
std::unique_ptr<LineChannel> spawn_stdio(const std::string& command);

// Connects to host:port over TCP.
std::unique_ptr<LineChannel> connect_tcp(const std::string& host, int port);

// "stdio:<command>", "tcp:<host>:<port>" or bare "<host>:<port>".
std::unique_ptr<LineChannel> open_channel(const std::string& address);

// Client side. Calls on one client are serialized, so each request is
// matched to the next response line.
class WireClient final : public EmbeddingProvider, public PairScorer {
 public:
  explicit WireClient(std::unique_ptr<LineChannel> channel);

  // Performs the info handshake once and caches the result.
  ProviderInfo info() override;
  std::vector<std::vector<float>> embed_raw(
      const std::vector<std::string>& texts) override;
  std::vector<double> score(
      const std::vector<std::pair<std::string, std::string>>& pairs) override;

 private:
  std::string roundtrip(const std::string& request);

  std::mutex mu_;
  std::unique_ptr<LineChannel> channel_;
  std::optional<ProviderInfo> info_;
};

// Reference responder for one request line, backed by in-process models.
// A null embedder or scorer answers the matching op with an error line.
std::string respond(std::string_view request_line, EmbeddingProvider* embedder,
                    PairScorer* scorer);

// Answers request lines from `in` until end of stream.
void serve(std::istream& in, std::ostream& out, EmbeddingProvider* embedder,
           PairScorer* scorer);

}  // namespace tagrank::wire
