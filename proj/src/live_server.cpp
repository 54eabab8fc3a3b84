#include "da/live_server.hpp"

#include "da/hmi.hpp"

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include <chrono>
#include <condition_variable>
#include <deque>
#include <map>
#include <mutex>
#include <optional>
#include <thread>
#include <variant>

namespace da {
namespace {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;
using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

struct Connected {
  std::uint64_t client;
};
struct Disconnected {
  std::uint64_t client;
};
struct ClientFrame {
  std::uint64_t client;
  json frame;
};
struct LlmDone {
  std::uint64_t job;
  std::optional<PersuasionMessage> message;
};
struct Shutdown {};

using Event = std::variant<Connected, Disconnected, ClientFrame, LlmDone, Shutdown>;

template <class T>
class Mailbox {
 public:
  void push(T item) {
    {
      std::lock_guard lock(mutex_);
      items_.push_back(std::move(item));
    }
    cv_.notify_one();
  }

  std::optional<T> pop_until(Clock::time_point deadline) {
    std::unique_lock lock(mutex_);
    cv_.wait_until(lock, deadline, [&] { return !items_.empty(); });
    if (items_.empty()) return std::nullopt;
    T item = std::move(items_.front());
    items_.pop_front();
    return item;
  }

  T pop() {
    std::unique_lock lock(mutex_);
    cv_.wait(lock, [&] { return !items_.empty(); });
    T item = std::move(items_.front());
    items_.pop_front();
    return item;
  }

 private:
  std::mutex mutex_;
  std::condition_variable cv_;
  std::deque<T> items_;
};

struct LlmJob {
  std::uint64_t id = 0;
  MessageRequest request;
};

Clock::duration wall(double seconds) {
  return std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(seconds));
}

json session_frame(std::string_view verb, double t) {
  return {{"type", "session"}, {"verb", verb}, {"t", t}};
}

}  // namespace

class WsSession;

struct LiveServer::Impl {
  Impl(LiveConfig c, std::shared_ptr<LlmClient> l)
      : config(std::move(c)),
        llm(std::move(l)),
        acceptor(ioc),
        log(session_header(config.scenario, config.policy, config.options, std::nullopt,
                           std::nullopt)) {}

  LiveConfig config;
  std::shared_ptr<LlmClient> llm;

  asio::io_context ioc;
  tcp::acceptor acceptor;
  std::weak_ptr<WsSession> active;  // io thread only
  std::uint64_t next_client = 1;    // io thread only

  Mailbox<Event> inbox;
  Mailbox<std::optional<LlmJob>> llm_jobs;

  mutable std::mutex log_mutex;
  SessionLog log;

  std::mutex done_mutex;
  std::condition_variable done_cv;
  bool done = false;

  std::thread io_thread;
  std::thread loop_thread;
  std::thread llm_thread;
  bool running = false;

  void do_accept();
  void on_handshake(const std::shared_ptr<WsSession>& s);
  void on_client_closed(const WsSession* s);
  void send_to_client(json frame);
  void run_loop();
  void run_llm();
  void mark_done();
};

class WsSession : public std::enable_shared_from_this<WsSession> {
 public:
  WsSession(tcp::socket socket, LiveServer::Impl& server, std::uint64_t id)
      : ws_(std::move(socket)), server_(server), id_(id) {}

  std::uint64_t id() const { return id_; }

  void run() {
    ws_.text(true);
    ws_.async_accept([self = shared_from_this()](beast::error_code ec) {
      if (ec) return;
      self->server_.on_handshake(self);
    });
  }

  void start_reading() { do_read(); }

  void send(std::string text) {
    outbox_.push_back(std::move(text));
    if (outbox_.size() == 1) do_write();
  }

  void close_after_pending() {
    closing_ = true;
    if (outbox_.empty()) do_close();
  }

 private:
  void do_read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      self->on_read(ec);
    });
  }

  void on_read(beast::error_code ec) {
    if (ec) {
      server_.on_client_closed(this);
      return;
    }
    const std::string text = beast::buffers_to_string(buffer_.data());
    buffer_.consume(buffer_.size());
    json frame;
    try {
      frame = json::parse(text);
    } catch (const json::parse_error&) {
      send(error_frame("protocol", "frame is not valid JSON").dump());
      do_read();
      return;
    }
    if (!frame.is_object() || !frame.contains("type") || !frame["type"].is_string() ||
        !frame.contains("verb") || !frame["verb"].is_string()) {
      send(error_frame("protocol", "frame needs string fields \"type\" and \"verb\"").dump());
    } else {
      server_.inbox.push(ClientFrame{id_, std::move(frame)});
    }
    do_read();
  }

  void do_write() {
    ws_.async_write(asio::buffer(outbox_.front()),
                    [self = shared_from_this()](beast::error_code ec, std::size_t) {
                      self->on_write(ec);
                    });
  }

  void on_write(beast::error_code ec) {
    if (ec) {
      outbox_.clear();
      return;
    }
    outbox_.pop_front();
    if (!outbox_.empty()) {
      do_write();
    } else if (closing_) {
      do_close();
    }
  }

  void do_close() {
    ws_.async_close(websocket::close_code::try_again_later,
                    [self = shared_from_this()](beast::error_code) {});
  }

  websocket::stream<tcp::socket> ws_;
  LiveServer::Impl& server_;
  std::uint64_t id_;
  beast::flat_buffer buffer_;
  std::deque<std::string> outbox_;
  bool closing_ = false;
};

void LiveServer::Impl::do_accept() {
  acceptor.async_accept([this](beast::error_code ec, tcp::socket socket) {
    if (ec) return;  // acceptor closed
    std::make_shared<WsSession>(std::move(socket), *this, next_client++)->run();
    do_accept();
  });
}

void LiveServer::Impl::on_handshake(const std::shared_ptr<WsSession>& s) {
  if (const auto current = active.lock()) {
    s->send(error_frame("busy", "another driver client is connected").dump());
    s->close_after_pending();
    return;
  }
  active = s;
  inbox.push(Connected{s->id()});
  s->start_reading();
}

void LiveServer::Impl::on_client_closed(const WsSession* s) {
  const auto current = active.lock();
  if (current && current.get() == s) {
    active.reset();
    inbox.push(Disconnected{s->id()});
  }
}

void LiveServer::Impl::send_to_client(json frame) {
  asio::post(ioc, [this, text = frame.dump()]() mutable {
    if (const auto s = active.lock()) s->send(std::move(text));
  });
}

void LiveServer::Impl::mark_done() {
  {
    std::lock_guard lock(done_mutex);
    done = true;
  }
  done_cv.notify_all();
}

void LiveServer::Impl::run_llm() {
  const GenerateOptions gen{&config.options.templates, &config.options.message_rules};
  while (auto job = llm_jobs.pop()) {
    std::optional<PersuasionMessage> message;
    try {
      const auto& r = job->request;
      message = generate(r.prompt, *llm, r.strategy, r.state, r.t, gen);
    } catch (const std::exception&) {
      // Left empty: the loop falls back to the template at the deadline.
    }
    inbox.push(LlmDone{job->id, std::move(message)});
  }
}

void LiveServer::Impl::run_loop() {
  const Scenario& scenario = config.scenario;
  const double period = config.options.trigger.eval_period_s;
  const double total = scenario.total_duration();
  const auto frame_interval = wall(1.0 / config.frame_hz);
  const auto llm_deadline = wall(config.llm_deadline_s);

  SessionEngine engine(scenario, config.policy, config.options, log);

  std::optional<std::uint64_t> client;
  bool started = false;
  bool ended = false;
  double sim_t = 0.0;
  std::size_t next_tick = 0;
  Clock::time_point last_wall = Clock::now();
  Clock::time_point next_frame = last_wall;
  std::optional<double> last_encouragement_t;

  struct Pending {
    MessageRequest request;
    Clock::time_point deadline;
  };
  std::map<std::uint64_t, Pending> pending;
  std::uint64_t next_job = 1;

  auto running = [&] { return client && started && !ended; };

  auto deliver = [&](const PersuasionMessage& m, bool encouragement) {
    const PersuasionMessage at_now(m.text, m.channel, m.strategy, sim_t, m.source);
    {
      std::lock_guard lock(log_mutex);
      engine.deliver(at_now, encouragement);
    }
    if (at_now.strategy == Strategy::social_interaction) last_encouragement_t = sim_t;
    send_to_client(message_frame(at_now));
  };

  auto send_state = [&] {
    const double t = std::min(sim_t, total);
    const auto& state = scenario.sections[scenario.section_index_at(std::min(t, total - 1e-9))].state;
    double score = 0.0;
    std::vector<DistractionKind> tasks;
    {
      std::lock_guard lock(log_mutex);
      score = engine.score_at(t);
      tasks = engine.active_tasks();
    }
    send_to_client(make_state_frame(t, state, score, std::move(tasks), last_encouragement_t,
                                    config.options.trigger)
                       .to_json());
  };

  auto finish = [&] {
    ended = true;
    // Pending generations are dropped; the session is over.
    pending.clear();
    send_state();
    send_to_client(session_frame("ended", sim_t));
    if (!config.log_path.empty()) {
      std::lock_guard lock(log_mutex);
      try {
        log.write(config.log_path);
      } catch (const std::exception&) {
      }
    }
    mark_done();
  };

  // Advances the simulated clock to wall time `now` and runs every tick it passes.
  auto advance = [&](Clock::time_point now) {
    if (running()) {
      sim_t += std::chrono::duration<double>(now - last_wall).count() * config.time_scale;
      sim_t = std::min(sim_t, total);
    }
    last_wall = now;
    while (running()) {
      const double tick_t = static_cast<double>(next_tick) * period;
      if (!(tick_t < total) || tick_t > sim_t) break;
      ++next_tick;
      TickResult r;
      {
        std::lock_guard lock(log_mutex);
        r = engine.evaluate(tick_t);
      }
      for (const auto& a : r.alerts) send_to_client(alert_frame(a));
      if (r.request) {
        const std::uint64_t id = next_job++;
        pending.emplace(id, Pending{*r.request, now + llm_deadline});
        llm_jobs.push(LlmJob{id, *r.request});
      }
    }
    if (running() && sim_t >= total) finish();
  };

  auto handle_frame = [&](const json& frame) {
    const std::string type = frame["type"].get<std::string>();
    const std::string verb = frame["verb"].get<std::string>();
    if (type == "control") {
      if (verb == "start_session") {
        if (started) {
          send_to_client(error_frame("invalid_control", "session already started"));
          return;
        }
        started = true;
        send_to_client(session_frame("started", sim_t));
        advance(Clock::now());
        send_state();
        next_frame = Clock::now() + frame_interval;
      } else if (verb == "end_session") {
        if (!started || ended) {
          send_to_client(error_frame("invalid_control", "no session in progress"));
          return;
        }
        finish();
      } else {
        send_to_client(error_frame("protocol", "unknown control verb '" + verb + "'"));
      }
      return;
    }
    if (type != "action") {
      send_to_client(error_frame("protocol", "unknown frame type '" + type + "'"));
      return;
    }
    if (verb != "start" && verb != "stop") {
      send_to_client(error_frame("protocol", "unknown action verb '" + verb + "'"));
      return;
    }
    if (!frame.contains("kind") || !frame["kind"].is_string()) {
      send_to_client(error_frame("protocol", "action needs a string \"kind\""));
      return;
    }
    DistractionKind kind;
    try {
      kind = distraction_kind_from_string(frame["kind"].get<std::string>());
    } catch (const std::exception& e) {
      send_to_client(error_frame("protocol", e.what()));
      return;
    }
    if (!running()) {
      send_to_client(error_frame("not_running", ended ? "session has ended"
                                                      : "send start_session first"));
      return;
    }
    try {
      std::lock_guard lock(log_mutex);
      if (verb == "start") {
        engine.start_task(kind, sim_t);
      } else {
        engine.stop_task(kind, sim_t);
      }
    } catch (const std::invalid_argument& e) {
      send_to_client(error_frame("invalid_action", e.what()));
      return;
    }
    send_state();
  };

  for (;;) {
    Clock::time_point wake = Clock::now() + std::chrono::seconds(1);
    if (running()) {
      wake = std::min(wake, next_frame);
      const double tick_t = static_cast<double>(next_tick) * period;
      wake = std::min(wake, last_wall + wall(std::max(0.0, std::min(tick_t, total) - sim_t) /
                                             config.time_scale));
    }
    for (const auto& [id, p] : pending) wake = std::min(wake, p.deadline);

    auto event = inbox.pop_until(wake);
    const auto now = Clock::now();
    advance(now);

    if (event) {
      if (std::holds_alternative<Shutdown>(*event)) break;
      if (const auto* c = std::get_if<Connected>(&*event)) {
        client = c->client;
        last_wall = now;
        if (started && !ended) {
          send_state();
          next_frame = now + frame_interval;
        }
      } else if (const auto* d = std::get_if<Disconnected>(&*event)) {
        if (client == d->client) client.reset();
      } else if (const auto* f = std::get_if<ClientFrame>(&*event)) {
        if (client == f->client) handle_frame(f->frame);
      } else if (auto* done_job = std::get_if<LlmDone>(&*event)) {
        const auto it = pending.find(done_job->job);
        if (it != pending.end() && !ended) {
          const auto& req = it->second.request;
          if (done_job->message) {
            deliver(*done_job->message, req.encouragement);
          } else {
            deliver(PersuasionMessage(fallback_template(req.strategy, req.state,
                                                        config.options.templates),
                                      Channel::both, req.strategy, sim_t,
                                      MessageSource::template_table),
                    req.encouragement);
          }
          pending.erase(it);
        }
      }
    }

    for (auto it = pending.begin(); it != pending.end();) {
      if (now >= it->second.deadline && !ended) {
        const auto& req = it->second.request;
        deliver(PersuasionMessage(fallback_template(req.strategy, req.state,
                                                    config.options.templates),
                                  Channel::both, req.strategy, sim_t,
                                  MessageSource::template_table),
                req.encouragement);
        it = pending.erase(it);
      } else {
        ++it;
      }
    }

    if (running() && now >= next_frame) {
      send_state();
      next_frame += frame_interval;
      if (next_frame < now) next_frame = now + frame_interval;
    }
  }
}

LiveServer::LiveServer(LiveConfig config, std::shared_ptr<LlmClient> llm)
    : impl_(std::make_unique<Impl>(std::move(config), std::move(llm))) {
  if (!impl_->llm) throw std::invalid_argument("live server needs an LLM client");
  if (!(impl_->config.time_scale > 0.0)) throw std::invalid_argument("time_scale must be > 0");
  if (!(impl_->config.frame_hz > 0.0)) throw std::invalid_argument("frame_hz must be > 0");
  if (!(impl_->config.llm_deadline_s > 0.0)) {
    throw std::invalid_argument("llm_deadline_s must be > 0");
  }
}

LiveServer::~LiveServer() { stop(); }

void LiveServer::start() {
  auto& s = *impl_;
  const tcp::endpoint endpoint(asio::ip::make_address(s.config.address), s.config.port);
  s.acceptor.open(endpoint.protocol());
  s.acceptor.set_option(asio::socket_base::reuse_address(true));
  s.acceptor.bind(endpoint);
  s.acceptor.listen();
  s.do_accept();
  s.running = true;
  s.io_thread = std::thread([&s] { s.ioc.run(); });
  s.llm_thread = std::thread([&s] { s.run_llm(); });
  s.loop_thread = std::thread([&s] { s.run_loop(); });
}

std::uint16_t LiveServer::port() const { return impl_->acceptor.local_endpoint().port(); }

void LiveServer::wait() {
  std::unique_lock lock(impl_->done_mutex);
  impl_->done_cv.wait(lock, [&] { return impl_->done; });
}

void LiveServer::stop() {
  auto& s = *impl_;
  if (!s.running) return;
  s.running = false;
  s.inbox.push(Shutdown{});
  s.loop_thread.join();
  s.llm_jobs.push(std::nullopt);
  s.llm_thread.join();
  // Let queued frames go out, then stop the network thread.
  asio::post(s.ioc, [&s] {
    beast::error_code ec;
    s.acceptor.close(ec);
  });
  std::this_thread::sleep_for(std::chrono::milliseconds(50));
  s.ioc.stop();
  s.io_thread.join();
  s.mark_done();
}

std::string LiveServer::log_jsonl() const {
  std::lock_guard lock(impl_->log_mutex);
  return impl_->log.to_jsonl();
}

}  // namespace da
