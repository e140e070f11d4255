#pragma once

// Line-delimited JSON protocol for external detector processes.
//
// Requests, one per line:
//   {"op":"detect","frame":F,"predicate":P,"boxes":[]}
//   {"op":"filter","frame":F,"predicate":P,"boxes":[[x0,y0,x1,y1],...]}
//   {"op":"reid","frame":Fa,"predicate":P,"boxes":[a,b],"frames":[Fa,Fb]}
// Responses, one per line, in request order:
//   detect         -> {"detections":[{"bbox":[x0,y0,x1,y1],"conf":c,"score":s},...]}
//   filter, reid   -> {"scores":[...]}   (one score per box; reid has one)
// A response {"error":"..."} reports a provider-side failure.

#include <chrono>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "vidq/oracle.hpp"

namespace vidq {

/// Malformed or mismatched traffic on the wire.
class ProtocolViolation : public OracleUnavailable {
 public:
  using OracleUnavailable::OracleUnavailable;
};

enum class WireOp { kDetect, kFilter, kReid };

const char* to_string(WireOp op);

struct WireRequest {
  WireOp op = WireOp::kDetect;
  FrameIndex frame = 0;
  std::string predicate;
  std::vector<BBox> boxes;
  std::vector<FrameIndex> frames;  // reid only: frame of each box

  friend bool operator==(const WireRequest&, const WireRequest&) = default;
};

struct WireDetection {
  BBox bbox;
  double conf = 0.0;
  std::optional<double> score;

  friend bool operator==(const WireDetection&, const WireDetection&) = default;
};

struct WireResponse {
  std::vector<WireDetection> detections;  // detect
  std::vector<double> scores;             // filter, reid

  friend bool operator==(const WireResponse&, const WireResponse&) = default;
};

std::string encode_request(const WireRequest& r);
WireRequest decode_request(const std::string& line);

std::string encode_response(WireOp op, const WireResponse& r);
std::string encode_error(const std::string& message);

/// Parses and validates a response for the given request: the right field
/// for the op, one score per box, scores in [0, 1], well-formed boxes.
/// Throws ProtocolViolation, or OracleUnavailable for an error response.
WireResponse decode_response(const std::string& line, const WireRequest& request);

/// Sends one line and returns the peer's one-line reply.
class LineTransport {
 public:
  virtual ~LineTransport() = default;
  virtual std::string round_trip(const std::string& line) = 0;
};

/// Talks to a child process over its stdin / stdout.
class SubprocessTransport final : public LineTransport {
 public:
  SubprocessTransport(std::vector<std::string> argv, std::chrono::milliseconds timeout);
  ~SubprocessTransport() override;
  SubprocessTransport(const SubprocessTransport&) = delete;
  SubprocessTransport& operator=(const SubprocessTransport&) = delete;

  /// Throws OracleUnavailable on timeout, EOF or a dead child.
  std::string round_trip(const std::string& line) override;

 private:
  void shutdown();

  int pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::chrono::milliseconds timeout_;
  std::string buffer_;
  bool broken_ = false;
};

/// DetectionOracle backed by an external process. Wire traffic is serialized
/// per connection. Initialization trajectories come from a local track list
/// since the protocol carries none.
class ExternalOracle final : public DetectionOracle {
 public:
  ExternalOracle(std::unique_ptr<LineTransport> transport,
                 std::vector<Trajectory> init_tracks = {});

  std::vector<Detection> detect_candidates(FrameIndex frame,
                                           const QuerySpec& spec) override;
  std::vector<Detection> semantic_filter(std::vector<Detection> detections,
                                         const QuerySpec& spec) override;
  double reid_similarity(const Detection& a, const Detection& b) override;
  std::vector<Trajectory> init_trajectories(const VideoMeta& meta,
                                            FrameIndex window) override;

 private:
  WireResponse call(const WireRequest& request);

  std::unique_ptr<LineTransport> transport_;
  std::vector<Trajectory> init_tracks_;
  std::mutex mutex_;
  std::string last_predicate_;
};

/// Answers requests from `in` on `out` using a local oracle until EOF.
/// Each malformed request gets an error response.
void serve_wire(DetectionOracle& oracle, std::istream& in, std::ostream& out);

struct ConformanceReport {
  int requests = 0;
  int violations = 0;
  std::vector<std::string> messages;  // first few violations
};

/// Sends `count` randomized requests and validates every reply against its
/// request. Box counts vary per request, so a reordered reply shows up as a
/// count mismatch.
ConformanceReport run_conformance(LineTransport& transport, int count,
                                  std::uint64_t seed, const VideoMeta& meta,
                                  const std::vector<std::string>& predicates);

}  // namespace vidq
