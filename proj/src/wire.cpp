#include "vidq/wire.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>

#include "vidq/rng.hpp"

namespace vidq {

using nlohmann::json;

const char* to_string(WireOp op) {
  switch (op) {
    case WireOp::kDetect: return "detect";
    case WireOp::kFilter: return "filter";
    case WireOp::kReid: return "reid";
  }
  return "?";
}

namespace {

WireOp parse_op(const std::string& s) {
  if (s == "detect") return WireOp::kDetect;
  if (s == "filter") return WireOp::kFilter;
  if (s == "reid") return WireOp::kReid;
  throw ProtocolViolation("unknown op '" + s + "'");
}

json box_json(const BBox& b) { return json::array({b.x_min, b.y_min, b.x_max, b.y_max}); }

BBox parse_box(const json& j) {
  if (!j.is_array() || j.size() != 4) throw ProtocolViolation("bbox must be [x0,y0,x1,y1]");
  for (const auto& v : j) {
    if (!v.is_number()) throw ProtocolViolation("bbox entries must be numbers");
  }
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
}

double parse_unit(const json& j, const char* what) {
  if (!j.is_number()) throw ProtocolViolation(std::string(what) + " must be a number");
  const double v = j.get<double>();
  if (!(v >= 0.0 && v <= 1.0)) throw ProtocolViolation(std::string(what) + " outside [0, 1]");
  return v;
}

json parse_line(const std::string& line) {
  try {
    auto j = json::parse(line);
    if (!j.is_object()) throw ProtocolViolation("message must be a JSON object");
    return j;
  } catch (const json::parse_error& e) {
    throw ProtocolViolation(std::string("unparseable message: ") + e.what());
  }
}

}  // namespace

std::string encode_request(const WireRequest& r) {
  json boxes = json::array();
  for (const auto& b : r.boxes) boxes.push_back(box_json(b));
  json j = {{"op", to_string(r.op)},
            {"frame", r.frame},
            {"predicate", r.predicate},
            {"boxes", boxes}};
  if (r.op == WireOp::kReid) j["frames"] = r.frames;
  return j.dump();
}

WireRequest decode_request(const std::string& line) {
  const json j = parse_line(line);
  WireRequest r;
  try {
    r.op = parse_op(j.at("op").get<std::string>());
    r.frame = j.at("frame").get<FrameIndex>();
    r.predicate = j.at("predicate").get<std::string>();
    for (const auto& b : j.at("boxes")) r.boxes.push_back(parse_box(b));
    if (j.contains("frames")) r.frames = j.at("frames").get<std::vector<FrameIndex>>();
  } catch (const json::exception& e) {
    throw ProtocolViolation(std::string("bad request: ") + e.what());
  }
  if (r.op == WireOp::kReid) {
    if (r.boxes.size() != 2) throw ProtocolViolation("reid needs exactly two boxes");
    if (r.frames.empty()) r.frames = {r.frame, r.frame};
    if (r.frames.size() != 2) throw ProtocolViolation("reid needs two frames");
  }
  return r;
}

std::string encode_response(WireOp op, const WireResponse& r) {
  if (op != WireOp::kDetect) return json{{"scores", r.scores}}.dump();
  json dets = json::array();
  for (const auto& d : r.detections) {
    json jd = {{"bbox", box_json(d.bbox)}, {"conf", d.conf}};
    if (d.score) jd["score"] = *d.score;
    dets.push_back(jd);
  }
  return json{{"detections", dets}}.dump();
}

std::string encode_error(const std::string& message) {
  return json{{"error", message}}.dump();
}

WireResponse decode_response(const std::string& line, const WireRequest& request) {
  const json j = parse_line(line);
  if (j.contains("error")) {
    throw OracleUnavailable("provider error: " + j["error"].dump());
  }
  WireResponse r;
  const bool detect = request.op == WireOp::kDetect;
  const char* expected = detect ? "detections" : "scores";
  const char* other = detect ? "scores" : "detections";
  if (!j.contains(expected) || j.contains(other) || j.size() != 1) {
    throw ProtocolViolation(std::string(to_string(request.op)) + " response must hold only '" +
                            expected + "'");
  }
  const json& body = j[expected];
  if (!body.is_array()) throw ProtocolViolation(std::string(expected) + " must be an array");
  if (detect) {
    for (const auto& jd : body) {
      if (!jd.is_object() || !jd.contains("bbox") || !jd.contains("conf")) {
        throw ProtocolViolation("detection needs bbox and conf");
      }
      WireDetection d;
      d.bbox = parse_box(jd["bbox"]);
      if (!d.bbox.well_formed()) throw ProtocolViolation("degenerate bbox");
      d.conf = parse_unit(jd["conf"], "conf");
      if (jd.contains("score")) d.score = parse_unit(jd["score"], "score");
      for (const auto& [key, value] : jd.items()) {
        if (key != "bbox" && key != "conf" && key != "score") {
          throw ProtocolViolation("unknown detection field '" + key + "'");
        }
      }
      r.detections.push_back(d);
    }
  } else {
    for (const auto& s : body) r.scores.push_back(parse_unit(s, "score"));
    const std::size_t want = request.op == WireOp::kReid ? 1 : request.boxes.size();
    if (r.scores.size() != want) {
      throw ProtocolViolation("expected " + std::to_string(want) + " scores, got " +
                              std::to_string(r.scores.size()));
    }
  }
  return r;
}

// ---------------------------------------------------------------------------

SubprocessTransport::SubprocessTransport(std::vector<std::string> argv,
                                         std::chrono::milliseconds timeout)
    : timeout_(timeout) {
  if (argv.empty()) throw InvalidConfig("provider command is empty");
  int in_pipe[2];
  int out_pipe[2];
  if (pipe2(in_pipe, O_CLOEXEC) != 0) throw OracleUnavailable("pipe failed");
  if (pipe2(out_pipe, O_CLOEXEC) != 0) {
    close(in_pipe[0]);
    close(in_pipe[1]);
    throw OracleUnavailable("pipe failed");
  }
  std::vector<char*> args;
  for (auto& a : argv) args.push_back(a.data());
  args.push_back(nullptr);

  pid_ = fork();
  if (pid_ < 0) throw OracleUnavailable("fork failed");
  if (pid_ == 0) {
    dup2(in_pipe[0], STDIN_FILENO);
    dup2(out_pipe[1], STDOUT_FILENO);
    execvp(args[0], args.data());
    _exit(127);
  }
  close(in_pipe[0]);
  close(out_pipe[1]);
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];
}

SubprocessTransport::~SubprocessTransport() { shutdown(); }

void SubprocessTransport::shutdown() {
  if (to_child_ >= 0) close(to_child_);
  if (from_child_ >= 0) close(from_child_);
  to_child_ = from_child_ = -1;
  if (pid_ > 0) {
    // Give a well-behaved child a moment to exit on EOF.
    for (int i = 0; i < 50; ++i) {
      if (waitpid(pid_, nullptr, WNOHANG) == pid_) {
        pid_ = -1;
        return;
      }
      usleep(2000);
    }
    kill(pid_, SIGKILL);
    waitpid(pid_, nullptr, 0);
    pid_ = -1;
  }
}

std::string SubprocessTransport::round_trip(const std::string& line) {
  if (broken_) throw OracleUnavailable("provider connection is closed");
  std::string msg = line + "\n";
  const char* p = msg.data();
  std::size_t left = msg.size();
  // A child that exited would raise SIGPIPE on write.
  signal(SIGPIPE, SIG_IGN);
  while (left > 0) {
    const ssize_t n = write(to_child_, p, left);
    if (n < 0) {
      if (errno == EINTR) continue;
      broken_ = true;
      throw OracleUnavailable(std::string("write to provider failed: ") + std::strerror(errno));
    }
    p += n;
    left -= std::size_t(n);
  }

  const auto deadline = std::chrono::steady_clock::now() + timeout_;
  for (;;) {
    if (auto pos = buffer_.find('\n'); pos != std::string::npos) {
      std::string reply = buffer_.substr(0, pos);
      buffer_.erase(0, pos + 1);
      return reply;
    }
    const auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - std::chrono::steady_clock::now());
    if (remaining.count() <= 0) {
      broken_ = true;
      throw OracleUnavailable("provider timed out");
    }
    pollfd pfd{from_child_, POLLIN, 0};
    const int rc = poll(&pfd, 1, int(remaining.count()));
    if (rc < 0) {
      if (errno == EINTR) continue;
      broken_ = true;
      throw OracleUnavailable("poll on provider failed");
    }
    if (rc == 0) continue;
    char chunk[4096];
    const ssize_t n = read(from_child_, chunk, sizeof chunk);
    if (n < 0) {
      if (errno == EINTR) continue;
      broken_ = true;
      throw OracleUnavailable("read from provider failed");
    }
    if (n == 0) {
      broken_ = true;
      throw OracleUnavailable("provider closed the connection");
    }
    buffer_.append(chunk, std::size_t(n));
  }
}

// ---------------------------------------------------------------------------

ExternalOracle::ExternalOracle(std::unique_ptr<LineTransport> transport,
                               std::vector<Trajectory> init_tracks)
    : transport_(std::move(transport)), init_tracks_(std::move(init_tracks)) {}

WireResponse ExternalOracle::call(const WireRequest& request) {
  std::lock_guard lock(mutex_);
  return decode_response(transport_->round_trip(encode_request(request)), request);
}

std::vector<Detection> ExternalOracle::detect_candidates(FrameIndex frame,
                                                         const QuerySpec& spec) {
  {
    std::lock_guard lock(mutex_);
    last_predicate_ = spec.predicate_text;
  }
  const auto r = call({WireOp::kDetect, frame, spec.predicate_text, {}, {}});
  std::vector<Detection> out;
  for (const auto& d : r.detections) {
    Detection det;
    det.frame = frame;
    det.bbox = d.bbox;
    det.det_confidence = d.conf;
    out.push_back(det);
  }
  return out;
}

std::vector<Detection> ExternalOracle::semantic_filter(std::vector<Detection> detections,
                                                       const QuerySpec& spec) {
  if (detections.empty()) return detections;
  // One request per frame, preserving order within the input.
  std::size_t i = 0;
  while (i < detections.size()) {
    std::size_t j = i;
    WireRequest req{WireOp::kFilter, detections[i].frame, spec.predicate_text, {}, {}};
    while (j < detections.size() && detections[j].frame == detections[i].frame) {
      req.boxes.push_back(detections[j].bbox);
      ++j;
    }
    const auto r = call(req);
    for (std::size_t k = i; k < j; ++k) detections[k].filter_score = r.scores[k - i];
    i = j;
  }
  return detections;
}

double ExternalOracle::reid_similarity(const Detection& a, const Detection& b) {
  std::string predicate;
  {
    std::lock_guard lock(mutex_);
    predicate = last_predicate_;
  }
  const auto r =
      call({WireOp::kReid, a.frame, predicate, {a.bbox, b.bbox}, {a.frame, b.frame}});
  return r.scores.front();
}

std::vector<Trajectory> ExternalOracle::init_trajectories(const VideoMeta&,
                                                          FrameIndex window) {
  std::vector<Trajectory> out;
  for (const auto& t : init_tracks_) {
    Trajectory cut{t.track_id, {}};
    for (const auto& p : t.points) {
      if (p.frame >= 0 && p.frame < window) cut.points.push_back(p);
    }
    if (cut.points.size() >= 2) out.push_back(std::move(cut));
  }
  return out;
}

// ---------------------------------------------------------------------------

void serve_wire(DetectionOracle& oracle, std::istream& in, std::ostream& out) {
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::string reply;
    try {
      const auto req = decode_request(line);
      const auto spec = QuerySpec::selection(req.predicate);
      WireResponse r;
      switch (req.op) {
        case WireOp::kDetect:
          for (const auto& d : oracle.detect_candidates(req.frame, spec)) {
            r.detections.push_back({d.bbox, d.det_confidence, d.filter_score});
          }
          break;
        case WireOp::kFilter: {
          std::vector<Detection> dets;
          for (const auto& b : req.boxes) {
            Detection d;
            d.frame = req.frame;
            d.bbox = b;
            dets.push_back(d);
          }
          for (const auto& d : oracle.semantic_filter(std::move(dets), spec)) {
            r.scores.push_back(d.filter_score.value_or(0.0));
          }
          break;
        }
        case WireOp::kReid: {
          Detection a;
          Detection b;
          a.frame = req.frames[0];
          a.bbox = req.boxes[0];
          b.frame = req.frames[1];
          b.bbox = req.boxes[1];
          r.scores.push_back(oracle.reid_similarity(a, b));
          break;
        }
      }
      reply = encode_response(req.op, r);
    } catch (const std::exception& e) {
      reply = encode_error(e.what());
    }
    out << reply << '\n' << std::flush;
  }
}

// ---------------------------------------------------------------------------

ConformanceReport run_conformance(LineTransport& transport, int count, std::uint64_t seed,
                                  const VideoMeta& meta,
                                  const std::vector<std::string>& predicates) {
  check_meta(meta);
  if (predicates.empty()) throw InvalidConfig("conformance needs at least one predicate");
  ConformanceReport report;
  auto rng = CounterRng::stream(seed, "conformance", {});
  auto random_box = [&]() {
    const double w = 8.0 + uniform01(rng) * 120.0;
    const double h = 8.0 + uniform01(rng) * 80.0;
    const double x = uniform01(rng) * (meta.width - w);
    const double y = uniform01(rng) * (meta.height - h);
    return BBox{x, y, x + w, y + h};
  };
  auto random_frame = [&]() {
    return FrameIndex(uniform_index(rng, std::uint64_t(meta.frame_count)));
  };
  for (int i = 0; i < count; ++i) {
    WireRequest req;
    req.op = static_cast<WireOp>(uniform_index(rng, 3));
    req.frame = random_frame();
    req.predicate = predicates[uniform_index(rng, predicates.size())];
    if (req.op == WireOp::kFilter) {
      const auto n = uniform_index(rng, 9);
      for (std::uint64_t b = 0; b < n; ++b) req.boxes.push_back(random_box());
    } else if (req.op == WireOp::kReid) {
      req.boxes = {random_box(), random_box()};
      req.frames = {req.frame, random_frame()};
    }
    ++report.requests;
    try {
      decode_response(transport.round_trip(encode_request(req)), req);
    } catch (const OracleUnavailable& e) {
      ++report.violations;
      if (report.messages.size() < 10) {
        report.messages.push_back("request " + std::to_string(i) + " (" + to_string(req.op) +
                                  "): " + e.what());
      }
      if (std::string(e.what()).find("timed out") != std::string::npos ||
          std::string(e.what()).find("closed") != std::string::npos) {
        report.violations += count - i - 1;
        break;
      }
    }
  }
  return report;
}

}  // namespace vidq
