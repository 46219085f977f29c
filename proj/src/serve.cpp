#include "vdi/serve.hpp"

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include <chrono>
#include <cmath>

#include "vdi/scenario_io.hpp"

namespace vdi::serve {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

namespace {

template <int N>
Eigen::Matrix<double, N, 1> vec_field(const Json& msg, const char* key) {
  const auto it = msg.find(key);
  if (it == msg.end()) throw std::invalid_argument(std::string("missing field '") + key + "'");
  if (!it->is_array() || it->size() != static_cast<std::size_t>(N)) {
    throw std::invalid_argument(std::string("field '") + key + "' must be a list of " + std::to_string(N) +
                                " numbers");
  }
  Eigen::Matrix<double, N, 1> v;
  for (int i = 0; i < N; ++i) {
    const Json& x = (*it)[static_cast<std::size_t>(i)];
    if (!x.is_number() || !std::isfinite(x.get<double>())) {
      throw std::invalid_argument(std::string("field '") + key + "' must contain finite numbers");
    }
    v[i] = x.get<double>();
  }
  return v;
}

double number_field(const Json& msg, const char* key) {
  const auto it = msg.find(key);
  if (it == msg.end()) throw std::invalid_argument(std::string("missing field '") + key + "'");
  if (!it->is_number() || !std::isfinite(it->get<double>())) {
    throw std::invalid_argument(std::string("field '") + key + "' must be a finite number");
  }
  return it->get<double>();
}

bool bool_field(const Json& msg, const char* key) {
  const auto it = msg.find(key);
  if (it == msg.end()) throw std::invalid_argument(std::string("missing field '") + key + "'");
  if (!it->is_boolean()) throw std::invalid_argument(std::string("field '") + key + "' must be true or false");
  return it->get<bool>();
}

void only_fields(const Json& msg, std::initializer_list<const char*> allowed) {
  for (const auto& [key, value] : msg.items()) {
    if (key == "type") continue;
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
      throw std::invalid_argument("unexpected field '" + key + "'");
    }
  }
}

}  // namespace

std::variant<ClientMessage, std::string> parse_client_message(const std::string& text) {
  Json msg;
  try {
    msg = Json::parse(text);
  } catch (const Json::exception&) {
    return std::string("message is not valid JSON");
  }
  if (!msg.is_object()) return std::string("message must be an object");
  const auto type_it = msg.find("type");
  if (type_it == msg.end() || !type_it->is_string()) return std::string("message has no string 'type'");
  const std::string type = type_it->get<std::string>();
  try {
    if (type == "set_tool_pose") {
      only_fields(msg, {"position", "quaternion"});
      const Vec3 p = vec_field<3>(msg, "position");
      const Eigen::Vector4d q = vec_field<4>(msg, "quaternion");
      if (q.norm() < 1e-9) throw std::invalid_argument("quaternion must be non-zero");
      return ClientMessage{SetToolPose{Pose{p, Rotation(Eigen::Quaterniond(q[0], q[1], q[2], q[3]))}}};
    }
    if (type == "set_force") {
      only_fields(msg, {"newtons", "direction"});
      const double n = number_field(msg, "newtons");
      Vec3 dir = Vec3::UnitZ();
      if (msg.contains("direction")) {
        dir = vec_field<3>(msg, "direction");
        if (dir.norm() < 1e-9) throw std::invalid_argument("direction must be non-zero");
        dir.normalize();
      }
      return ClientMessage{SetForce{n * dir}};
    }
    if (type == "press_device") {
      only_fields(msg, {"pressed", "twist"});
      PressDevice m;
      m.pressed = bool_field(msg, "pressed");
      if (msg.contains("twist")) m.twist = vec_field<6>(msg, "twist");
      return ClientMessage{m};
    }
    if (type == "pull_pin") {
      only_fields(msg, {});
      return ClientMessage{PullPin{}};
    }
    if (type == "reattach") {
      only_fields(msg, {});
      return ClientMessage{Reattach{}};
    }
    if (type == "set_config") {
      only_fields(msg, {"path", "value"});
      const auto path = msg.find("path");
      if (path == msg.end() || !path->is_string()) throw std::invalid_argument("missing string field 'path'");
      if (!msg.contains("value")) throw std::invalid_argument("missing field 'value'");
      // JSON is valid YAML flow syntax
      return ClientMessage{SetConfig{path->get<std::string>(), msg.at("value").dump()}};
    }
  } catch (const std::invalid_argument& e) {
    return type + ": " + e.what();
  }
  return "unknown message type '" + type + "'";
}

Json error_frame(const std::string& message) { return {{"type", "error"}, {"message", message}}; }

Json state_frame(const TickRecord& r, const std::optional<CameraDecision>& command, long inputs_applied) {
  Json visible = Json::array();
  for (int id : r.visible) visible.push_back(id);
  return {
      {"type", "state"},
      {"tick", r.tick},
      {"time", r.time},
      {"mode", std::string(to_string(r.mode))},
      {"led",
       {{"pattern", std::string(to_string(r.signals.led.pattern))},
        {"color", std::string(to_string(r.signals.led.color))},
        {"level", r.signals.led.level}}},
      {"beep", r.signals.beep},
      {"warning_tone", r.signals.warning_tone},
      {"tool_true", pose_json(r.tool_true)},
      {"tool_estimate", r.estimate ? pose_json(r.estimate->tool_in_world) : Json(nullptr)},
      {"camera_decision", camera_json(r.camera)},
      {"camera_command", command ? camera_json(*command) : Json(nullptr)},
      {"objectives", r.objectives ? objectives_json(*r.objectives) : Json(nullptr)},
      {"visible_markers", visible},
      {"attached", r.attached},
      {"pin_pulled", r.pin_pulled},
      {"inputs_applied", inputs_applied},
  };
}

InteractiveSession::InteractiveSession(Scenario scenario)
    : session_([&] {
        scenario.interactive = true;
        return scenario;
      }()) {
  session_.set_tool_pose(session_.world().tool_true);
}

std::optional<std::string> InteractiveSession::apply(const ClientMessage& message) {
  const double now = session_.world().time;
  const auto visitor = [&](const auto& m) -> std::optional<std::string> {
    using T = std::decay_t<decltype(m)>;
    if constexpr (std::is_same_v<T, SetToolPose>) {
      session_.set_tool_pose(m.pose);
    } else if constexpr (std::is_same_v<T, SetForce>) {
      Event e{now, EventKind::ExternalForce};
      e.force = m.force;
      session_.inject(e);
    } else if constexpr (std::is_same_v<T, PressDevice>) {
      Event e{now, EventKind::Device};
      e.pressed = m.pressed;
      e.twist = m.twist;
      session_.inject(e);
    } else if constexpr (std::is_same_v<T, PullPin>) {
      session_.inject(Event{now, EventKind::PullPin});
    } else if constexpr (std::is_same_v<T, Reattach>) {
      session_.inject(Event{now, EventKind::Reattach});
    } else {
      try {
        session_.update_config(with_setting(session_.scenario(), m.path, m.value));
      } catch (const std::exception& e) {
        return "set_config: " + std::string(e.what());
      }
    }
    return std::nullopt;
  };
  auto err = std::visit(visitor, message);
  if (!err) ++applied_;
  return err;
}

Json InteractiveSession::tick() {
  const TickRecord rec = session_.advance();
  Json frame = state_frame(rec, session_.camera_target(), pending_);
  pending_ = applied_;
  return frame;
}

void FrameMailbox::post(std::shared_ptr<const std::string> frame, bool acknowledges) {
  std::lock_guard lock(mutex_);
  if (acknowledges && !milestone_) milestone_ = frame;
  latest_ = std::move(frame);
}

std::shared_ptr<const std::string> FrameMailbox::take() {
  std::lock_guard lock(mutex_);
  if (milestone_) {
    auto out = std::move(milestone_);
    milestone_.reset();
    if (latest_ == out) latest_.reset();
    return out;
  }
  auto out = std::move(latest_);
  latest_.reset();
  return out;
}

namespace {

class Connection : public std::enable_shared_from_this<Connection> {
 public:
  using InputQueue = BoundedQueue<std::pair<std::weak_ptr<Connection>, ClientMessage>>;

  Connection(tcp::socket socket, InputQueue& inputs, double frame_rate)
      : ws_(std::move(socket)),
        timer_(ws_.get_executor()),
        inputs_(inputs),
        period_(std::chrono::duration_cast<std::chrono::steady_clock::duration>(
            std::chrono::duration<double>(1.0 / frame_rate))) {}

  void start() {
    ws_.async_accept([self = shared_from_this()](beast::error_code ec) {
      if (ec) return self->close();
      self->open_ = true;
      self->read();
      self->schedule();
    });
  }

  bool open() const { return open_; }
  FrameMailbox& mailbox() { return mailbox_; }

  void post_error(std::string text) {
    std::lock_guard lock(errors_mutex_);
    if (errors_.size() >= kMaxErrors) errors_.pop_front();
    errors_.push_back(std::make_shared<const std::string>(std::move(text)));
  }

  void close() {
    open_ = false;
    closed_ = true;
    timer_.cancel();
  }

 private:
  static constexpr std::size_t kMaxErrors = 64;

  void read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return self->close();
      const std::string text = beast::buffers_to_string(self->buffer_.data());
      self->buffer_.consume(self->buffer_.size());
      auto parsed = parse_client_message(text);
      if (auto* err = std::get_if<std::string>(&parsed)) {
        self->post_error(error_frame(*err).dump());
      } else if (!self->inputs_.push({self, std::get<ClientMessage>(parsed)})) {
        self->post_error(error_frame("input queue full; message dropped").dump());
      }
      self->read();
    });
  }

  void schedule() {
    timer_.expires_after(period_);
    timer_.async_wait([self = shared_from_this()](beast::error_code ec) {
      if (ec || self->closed_) return;
      self->flush();
      self->schedule();
    });
  }

  void flush() {
    if (writing_) return;
    std::shared_ptr<const std::string> next;
    {
      std::lock_guard lock(errors_mutex_);
      if (!errors_.empty()) {
        next = errors_.front();
        errors_.pop_front();
      }
    }
    if (!next) next = mailbox_.take();
    if (!next) return;
    writing_ = true;
    ws_.text(true);
    ws_.async_write(asio::buffer(*next), [self = shared_from_this(), next](beast::error_code ec, std::size_t) {
      self->writing_ = false;
      if (ec) self->close();
    });
  }

  websocket::stream<tcp::socket> ws_;
  asio::steady_timer timer_;
  beast::flat_buffer buffer_;
  InputQueue& inputs_;
  std::chrono::steady_clock::duration period_;
  FrameMailbox mailbox_;
  std::mutex errors_mutex_;
  std::deque<std::shared_ptr<const std::string>> errors_;
  std::atomic<bool> open_{false};
  bool closed_ = false;
  bool writing_ = false;
};

}  // namespace

struct Server::Impl {
  Impl(Scenario scenario, ServerOptions opts)
      : options(opts), sim(std::move(scenario)), inputs(opts.input_capacity), acceptor(io) {}

  ServerOptions options;
  InteractiveSession sim;
  Connection::InputQueue inputs;
  asio::io_context io;
  tcp::acceptor acceptor;
  std::mutex connections_mutex;
  std::vector<std::weak_ptr<Connection>> connections;
  std::atomic<bool> running{false};
  std::thread net_thread;
  std::thread sim_thread;

  void accept() {
    acceptor.async_accept([this](beast::error_code ec, tcp::socket socket) {
      if (ec) return;
      auto conn = std::make_shared<Connection>(std::move(socket), inputs, options.frame_rate);
      {
        std::lock_guard lock(connections_mutex);
        std::erase_if(connections, [](const auto& w) { return w.expired(); });
        connections.push_back(conn);
      }
      conn->start();
      accept();
    });
  }

  void simulate() {
    const auto period = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
        std::chrono::duration<double>(sim.session().scenario().tick));
    auto next = std::chrono::steady_clock::now();
    long last_ack = 0;
    while (running) {
      for (auto& [who, msg] : inputs.drain()) {
        if (auto err = sim.apply(msg)) {
          if (auto conn = who.lock()) conn->post_error(error_frame(*err).dump());
        }
      }
      const Json frame = sim.tick();
      const long ack = frame.at("inputs_applied").get<long>();
      auto text = std::make_shared<const std::string>(frame.dump());
      {
        std::lock_guard lock(connections_mutex);
        for (const auto& w : connections) {
          if (auto conn = w.lock(); conn && conn->open()) conn->mailbox().post(text, ack > last_ack);
        }
      }
      last_ack = ack;
      next += period;
      std::this_thread::sleep_until(next);
    }
  }
};

Server::Server(Scenario scenario, ServerOptions options)
    : impl_(std::make_unique<Impl>(std::move(scenario), options)) {}

Server::~Server() { stop(); }

unsigned short Server::start() {
  Impl& m = *impl_;
  const tcp::endpoint ep(asio::ip::make_address("0.0.0.0"), m.options.port);
  m.acceptor.open(ep.protocol());
  m.acceptor.set_option(asio::socket_base::reuse_address(true));
  m.acceptor.bind(ep);
  m.acceptor.listen();
  m.running = true;
  m.accept();
  m.net_thread = std::thread([&m] {
    auto guard = asio::make_work_guard(m.io);
    m.io.run();
  });
  m.sim_thread = std::thread([&m] { m.simulate(); });
  return m.acceptor.local_endpoint().port();
}

void Server::stop() {
  Impl& m = *impl_;
  if (!m.running.exchange(false)) return;
  m.io.stop();
  if (m.sim_thread.joinable()) m.sim_thread.join();
  if (m.net_thread.joinable()) m.net_thread.join();
}

}  // namespace vdi::serve
