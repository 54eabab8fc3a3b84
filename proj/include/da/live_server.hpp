#pragma once

#include "da/llm_client.hpp"
#include "da/scenario.hpp"
#include "da/session.hpp"

#include <cstdint>
#include <memory>
#include <string>

namespace da {

struct LiveConfig {
  Scenario scenario;
  PolicyKind policy = PolicyKind::persuasion;
  SessionOptions options;
  std::string address = "127.0.0.1";
  std::uint16_t port = 0;          // 0 picks a free port
  double time_scale = 1.0;         // simulated seconds per wall-clock second
  double frame_hz = 2.0;           // state frames per wall-clock second
  double llm_deadline_s = 5.0;     // wall-clock wait before the template is used
  std::string log_path;            // written when the session ends, if set
};

/// WebSocket endpoint for a live session driven by a human through the UI.
///
/// Frames (JSON text):
///   server -> client  {"type":"state",...} at frame_hz, {"type":"message",...},
///                     {"type":"session","verb":"started"|"ended","t"},
///                     {"type":"error","code","detail"}
///   client -> server  {"type":"action","verb":"start"|"stop","kind"},
///                     {"type":"control","verb":"start_session"|"end_session"}
///
/// One driver client at a time; a second one receives a "busy" error and is
/// closed. The simulation clock advances only while a client is connected and
/// the session has been started. A single loop thread owns the session; the
/// network thread and the LLM worker talk to it through a queue.
class LiveServer {
 public:
  LiveServer(LiveConfig config, std::shared_ptr<LlmClient> llm);
  ~LiveServer();

  LiveServer(const LiveServer&) = delete;
  LiveServer& operator=(const LiveServer&) = delete;

  /// Binds and starts the network and session threads. Throws on bind failure.
  void start();
  /// Bound port; valid after start().
  std::uint16_t port() const;
  /// Blocks until the session ends or stop() is called.
  void wait();
  void stop();

  /// JSONL of the session so far (header plus records).
  std::string log_jsonl() const;

 private:
  friend class WsSession;
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace da
