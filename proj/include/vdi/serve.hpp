#pragma once

#include <atomic>
#include <condition_variable>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "vdi/run_log.hpp"
#include "vdi/session.hpp"

namespace vdi::serve {

struct SetToolPose {
  Pose pose;
};
struct SetForce {
  Vec3 force;
};
struct PressDevice {
  bool pressed = false;
  Vec6 twist = Vec6::Zero();
};
struct PullPin {};
struct Reattach {};
struct SetConfig {
  std::string path;
  std::string value;  ///< YAML text
};

using ClientMessage = std::variant<SetToolPose, SetForce, PressDevice, PullPin, Reattach, SetConfig>;

/// Parses one client message. Returns the error text on a protocol violation.
std::variant<ClientMessage, std::string> parse_client_message(const std::string& text);

Json error_frame(const std::string& message);

/// Server-to-client state frame for one tick.
Json state_frame(const TickRecord& record, const std::optional<CameraDecision>& camera_command, long inputs_applied);

/**
 * Session driven by client messages instead of the scripted timeline. Not
 * thread-safe; the server owns it on the simulation thread.
 */
class InteractiveSession {
 public:
  explicit InteractiveSession(Scenario scenario);

  /// Applies a message before the next tick. Returns an error text when the
  /// message cannot be applied (for example an invalid set_config value).
  std::optional<std::string> apply(const ClientMessage& message);
  /// Advances one tick and returns the state frame.
  Json tick();

  const Session& session() const { return session_; }
  long inputs_applied() const { return applied_; }

 private:
  Session session_;
  long applied_ = 0;
  long pending_ = 0;  ///< applied, not yet visible in a record
};

/// Fixed-capacity FIFO; push fails when full.
template <class T>
class BoundedQueue {
 public:
  explicit BoundedQueue(std::size_t capacity) : capacity_(capacity) {}

  bool push(T value) {
    std::lock_guard lock(mutex_);
    if (items_.size() >= capacity_) return false;
    items_.push_back(std::move(value));
    return true;
  }

  std::vector<T> drain() {
    std::lock_guard lock(mutex_);
    std::vector<T> out(std::make_move_iterator(items_.begin()), std::make_move_iterator(items_.end()));
    items_.clear();
    return out;
  }

 private:
  std::size_t capacity_;
  std::mutex mutex_;
  std::deque<T> items_;
};

/**
 * Newest-wins frame slot. A frame that first reflects newly applied inputs
 * is held until taken, so an acknowledgement is never overwritten before it
 * is sent; at most two frames are ever buffered.
 */
class FrameMailbox {
 public:
  void post(std::shared_ptr<const std::string> frame, bool acknowledges);
  std::shared_ptr<const std::string> take();

 private:
  std::mutex mutex_;
  std::shared_ptr<const std::string> latest_;
  std::shared_ptr<const std::string> milestone_;
};

struct ServerOptions {
  unsigned short port = 8765;  ///< 0 picks a free port
  double frame_rate = 30.0;    ///< upper bound on state frames per second
  std::size_t input_capacity = 256;
};

/**
 * Websocket front-end. A simulation thread ticks the session in real time;
 * a network thread accepts clients, queues their messages and sends the
 * newest state frame at most `frame_rate` times per second.
 */
class Server {
 public:
  Server(Scenario scenario, ServerOptions options);
  ~Server();

  /// Binds and starts both threads. Returns the bound port.
  unsigned short start();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace vdi::serve
