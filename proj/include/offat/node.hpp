#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>

#include "offat/config.hpp"
#include "offat/stack.hpp"

namespace offat {

/// The LAN daemon. Owns one ProtocolStack driven by a single loop thread;
/// socket readers, the TCP sender and the HTTP control API talk to the loop
/// only through its task queue.
class Node {
public:
    explicit Node(NodeConfig config, std::optional<std::uint64_t> seed = std::nullopt);
    ~Node();
    Node(const Node&) = delete;
    Node& operator=(const Node&) = delete;

    /// Opens sockets and starts threads. Throws Errc::PortInUse or
    /// Errc::MulticastJoinFailed.
    void start();
    /// Best-effort group disconnect, then shuts everything down.
    void stop();

    /// Runs `fn` on the loop thread and waits for it. Exceptions propagate.
    void run_on_loop(const std::function<void(ProtocolStack&, TimeMs)>& fn);

    /// Events with seq > after; blocks up to `wait_ms` when none are ready.
    std::vector<ControlEvent> events_after(std::uint64_t after, int wait_ms);

    /// Persists profile changes made through the API (no-op without a path).
    void set_config_path(std::filesystem::path path);
    /// Applies a new profile on the loop and persists it. Throws profile errors.
    void update_profile(const Profile& profile);

    bool running() const noexcept;

    const NodeConfig& config() const noexcept;
    std::uint16_t api_port() const noexcept;
    /// Discovery datagrams emitted since start (airplane mode keeps it 0).
    std::uint64_t datagrams_sent() const noexcept;
    TimeMs now() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace offat
