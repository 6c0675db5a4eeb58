#include "offat/node.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <chrono>
#include <condition_variable>
#include <cstring>
#include <deque>
#include <future>
#include <mutex>
#include <thread>
#include <unordered_map>

#include <httplib.h>

#include "control_api.hpp"
#include "offat/error.hpp"
#include "offat/wire.hpp"

namespace offat {

namespace {

constexpr std::uint32_t kMaxStreamFrame = 1u << 20;
constexpr int kPollMs = 100;
constexpr int kConnectTimeoutMs = 2000;

sockaddr_in make_addr(const std::string& ip, std::uint16_t port) {
    sockaddr_in a{};
    a.sin_family = AF_INET;
    a.sin_port = htons(port);
    if (inet_pton(AF_INET, ip.c_str(), &a.sin_addr) != 1)
        throw Error(Errc::InvalidConfig, "not an IPv4 address: " + ip);
    return a;
}

void close_fd(int& fd) {
    if (fd >= 0) ::close(fd);
    fd = -1;
}

int open_socket(int type) {
    int fd = ::socket(AF_INET, type | SOCK_CLOEXEC, 0);
    if (fd < 0) throw Error(Errc::PortInUse, std::string("socket: ") + std::strerror(errno));
    return fd;
}

void bind_or_throw(int fd, std::uint16_t port, const char* what) {
    sockaddr_in a{};
    a.sin_family = AF_INET;
    a.sin_addr.s_addr = htonl(INADDR_ANY);
    a.sin_port = htons(port);
    if (::bind(fd, reinterpret_cast<sockaddr*>(&a), sizeof a) != 0) {
        const int err = errno;
        ::close(fd);
        throw Error(Errc::PortInUse,
                    std::string(what) + " port " + std::to_string(port) + ": " + std::strerror(err));
    }
}

bool write_all(int fd, const std::uint8_t* data, std::size_t len) {
    while (len > 0) {
        ssize_t n = ::send(fd, data, len, MSG_NOSIGNAL);
        if (n < 0 && errno == EINTR) continue;
        if (n <= 0) return false;
        data += n;
        len -= static_cast<std::size_t>(n);
    }
    return true;
}

bool read_all(int fd, std::uint8_t* data, std::size_t len) {
    while (len > 0) {
        ssize_t n = ::recv(fd, data, len, 0);
        if (n < 0 && errno == EINTR) continue;
        if (n <= 0) return false;
        data += n;
        len -= static_cast<std::size_t>(n);
    }
    return true;
}

int connect_with_timeout(const sockaddr_in& addr) {
    int fd = ::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC | SOCK_NONBLOCK, 0);
    if (fd < 0) return -1;
    int rc = ::connect(fd, reinterpret_cast<const sockaddr*>(&addr), sizeof addr);
    if (rc != 0 && errno == EINPROGRESS) {
        pollfd p{fd, POLLOUT, 0};
        if (::poll(&p, 1, kConnectTimeoutMs) == 1) {
            int err = 0;
            socklen_t len = sizeof err;
            ::getsockopt(fd, SOL_SOCKET, SO_ERROR, &err, &len);
            rc = err == 0 ? 0 : -1;
        }
    }
    if (rc != 0) {
        ::close(fd);
        return -1;
    }
    ::fcntl(fd, F_SETFL, ::fcntl(fd, F_GETFL) & ~O_NONBLOCK);
    int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    return fd;
}

bool is_datagram(const WireFrame& frame) {
    return std::holds_alternative<ProbeFrame>(frame) || std::holds_alternative<BeaconFrame>(frame);
}

}  // namespace

struct Node::Impl {
    NodeConfig config;
    std::optional<std::uint64_t> seed;
    std::filesystem::path config_path;
    std::mutex config_mu;
    const std::chrono::steady_clock::time_point epoch = std::chrono::steady_clock::now();
    std::unique_ptr<ProtocolStack> stack;

    std::mutex loop_mu;
    std::condition_variable loop_cv;
    std::deque<std::function<void()>> tasks;
    bool loop_stop = false;
    std::thread loop_thread;
    std::atomic<bool> running{false};
    std::atomic<bool> closing{false};
    std::atomic<bool> io_stop{false};

    std::mutex journal_mu;
    std::condition_variable journal_cv;
    std::vector<ControlEvent> journal;

    int mc_fd = -1;
    int uc_fd = -1;
    int tcp_fd = -1;
    sockaddr_in group_addr{};
    std::mutex book_mu;
    std::unordered_map<DeviceId, sockaddr_in> book;
    std::atomic<std::uint64_t> datagrams{0};
    std::thread udp_thread;
    std::thread accept_thread;
    std::mutex readers_mu;
    std::vector<std::thread> readers;
    std::vector<int> reader_fds;

    std::mutex send_mu;
    std::condition_variable send_cv;
    std::deque<std::pair<DeviceId, std::vector<std::uint8_t>>> send_queue;
    bool sending = false;
    bool send_stop = false;
    std::map<DeviceId, int> connections;
    std::thread send_thread;

    std::unique_ptr<httplib::Server> api;
    std::thread api_thread;
    std::uint16_t api_port = 0;

    TimeMs now() const {
        return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - epoch)
            .count();
    }

    void post(std::function<void()> task) {
        {
            std::lock_guard lk(loop_mu);
            tasks.push_back(std::move(task));
        }
        loop_cv.notify_one();
    }

    void loop() {
        std::unique_lock lk(loop_mu);
        for (;;) {
            if (tasks.empty() && !loop_stop) {
                const TimeMs t = now();
                const TimeMs wake = stack->next_wakeup(t);
                auto ready = [this] { return !tasks.empty() || loop_stop; };
                if (wake == kNever) loop_cv.wait(lk, ready);
                else if (wake > t) loop_cv.wait_for(lk, std::chrono::milliseconds(wake - t), ready);
            }
            if (loop_stop && tasks.empty()) break;
            auto batch = std::move(tasks);
            tasks.clear();
            lk.unlock();
            for (auto& task : batch) task();
            stack->tick(now());
            flush();
            lk.lock();
        }
    }

    void flush() {
        auto events = stack->take_events();
        if (!events.empty()) {
            {
                std::lock_guard lk(journal_mu);
                for (auto& e : events) journal.push_back(std::move(e));
            }
            journal_cv.notify_all();
        }
        for (auto& out : stack->take_outbound()) transmit(out);
    }

    void transmit(const Outbound& out) {
        if (config.airplane || uc_fd < 0) return;
        auto bytes = encode_frame(out.frame);
        if (out.route == Outbound::Route::Broadcast) {
            send_datagram(bytes, group_addr);
            return;
        }
        std::optional<sockaddr_in> dest;
        {
            std::lock_guard lk(book_mu);
            if (auto it = book.find(out.to); it != book.end()) dest = it->second;
        }
        if (!dest) return;
        if (is_datagram(out.frame)) {
            send_datagram(bytes, *dest);
        } else {
            {
                std::lock_guard lk(send_mu);
                send_queue.emplace_back(out.to, std::move(bytes));
            }
            send_cv.notify_one();
        }
    }

    void send_datagram(const std::vector<std::uint8_t>& bytes, const sockaddr_in& to) {
        if (bytes.size() > kMaxDatagramBytes) return;
        if (::sendto(uc_fd, bytes.data(), bytes.size(), 0, reinterpret_cast<const sockaddr*>(&to), sizeof to) >= 0)
            ++datagrams;
    }

    void deliver(WireFrame frame) {
        post([this, frame = std::move(frame)] {
            try {
                stack->on_frame(frame, now());
            } catch (const Error&) {
                // a frame that violates protocol state is dropped like a corrupt one
            }
        });
    }

    void udp_reader() {
        std::vector<std::uint8_t> buf(65536);
        pollfd fds[2] = {{mc_fd, POLLIN, 0}, {uc_fd, POLLIN, 0}};
        while (!io_stop) {
            if (::poll(fds, 2, kPollMs) <= 0) continue;
            for (auto& p : fds) {
                if (!(p.revents & POLLIN)) continue;
                sockaddr_in src{};
                socklen_t len = sizeof src;
                ssize_t n = ::recvfrom(p.fd, buf.data(), buf.size(), 0, reinterpret_cast<sockaddr*>(&src), &len);
                if (n <= 0) continue;
                WireFrame frame;
                try {
                    frame = decode_frame({buf.data(), static_cast<std::size_t>(n)});
                } catch (const Error&) {
                    continue;
                }
                const DeviceId* from = nullptr;
                if (auto* probe = std::get_if<ProbeFrame>(&frame)) from = &probe->device;
                else if (auto* beacon = std::get_if<BeaconFrame>(&frame)) from = &beacon->device;
                if (!from || *from == config.device_id) continue;
                {
                    std::lock_guard lk(book_mu);
                    book[*from] = src;
                }
                deliver(std::move(frame));
            }
        }
    }

    void accept_loop() {
        pollfd p{tcp_fd, POLLIN, 0};
        while (!io_stop) {
            if (::poll(&p, 1, kPollMs) <= 0) continue;
            int fd = ::accept4(tcp_fd, nullptr, nullptr, SOCK_CLOEXEC);
            if (fd < 0) continue;
            std::lock_guard lk(readers_mu);
            reader_fds.push_back(fd);
            readers.emplace_back([this, fd] { stream_reader(fd); });
        }
    }

    void stream_reader(int fd) {
        std::vector<std::uint8_t> body;
        for (;;) {
            std::uint8_t head[4];
            if (!read_all(fd, head, 4)) break;
            const std::uint32_t len = std::uint32_t{head[0]} << 24 | std::uint32_t{head[1]} << 16 |
                                      std::uint32_t{head[2]} << 8 | head[3];
            if (len > kMaxStreamFrame) break;
            body.resize(len);
            if (!read_all(fd, body.data(), len)) break;
            try {
                auto frame = decode_frame(body);
                if (!is_datagram(frame)) deliver(std::move(frame));
            } catch (const Error&) {
                break;
            }
        }
        ::shutdown(fd, SHUT_RDWR);
    }

    void sender() {
        std::unique_lock lk(send_mu);
        for (;;) {
            send_cv.wait(lk, [this] { return !send_queue.empty() || send_stop; });
            if (send_queue.empty()) break;
            auto [to, bytes] = std::move(send_queue.front());
            send_queue.pop_front();
            sending = true;
            lk.unlock();
            push_stream(to, bytes);
            lk.lock();
            sending = false;
            send_cv.notify_all();
        }
        for (auto& [id, fd] : connections) ::close(fd);
        connections.clear();
    }

    void push_stream(const DeviceId& to, const std::vector<std::uint8_t>& bytes) {
        std::vector<std::uint8_t> framed(4 + bytes.size());
        const auto len = static_cast<std::uint32_t>(bytes.size());
        framed[0] = static_cast<std::uint8_t>(len >> 24);
        framed[1] = static_cast<std::uint8_t>(len >> 16);
        framed[2] = static_cast<std::uint8_t>(len >> 8);
        framed[3] = static_cast<std::uint8_t>(len);
        std::copy(bytes.begin(), bytes.end(), framed.begin() + 4);
        for (int attempt = 0; attempt < 2; ++attempt) {
            int fd = -1;
            if (auto it = connections.find(to); it != connections.end()) {
                fd = it->second;
            } else {
                sockaddr_in dest{};
                {
                    std::lock_guard lk(book_mu);
                    auto it2 = book.find(to);
                    if (it2 == book.end()) return;
                    dest = it2->second;
                }
                fd = connect_with_timeout(dest);
                if (fd < 0) return;
                connections[to] = fd;
            }
            if (write_all(fd, framed.data(), framed.size())) return;
            ::close(fd);
            connections.erase(to);
        }
    }

    void drain_sender(int wait_ms) {
        std::unique_lock lk(send_mu);
        send_cv.wait_for(lk, std::chrono::milliseconds(wait_ms),
                         [this] { return send_queue.empty() && !sending; });
    }

    void open_transport() {
        group_addr = make_addr(config.multicast_group, config.multicast_port);
        const sockaddr_in iface = make_addr(config.interface_addr, 0);
        const int one = 1;

        mc_fd = open_socket(SOCK_DGRAM);
        ::setsockopt(mc_fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
        ::setsockopt(mc_fd, SOL_SOCKET, SO_REUSEPORT, &one, sizeof one);
        bind_or_throw(mc_fd, config.multicast_port, "multicast");
        ip_mreq mreq{};
        mreq.imr_multiaddr = group_addr.sin_addr;
        mreq.imr_interface = iface.sin_addr;
        if (::setsockopt(mc_fd, IPPROTO_IP, IP_ADD_MEMBERSHIP, &mreq, sizeof mreq) != 0) {
            const int err = errno;
            close_fd(mc_fd);
            throw Error(Errc::MulticastJoinFailed, config.multicast_group + " on " + config.interface_addr + ": " +
                                                       std::strerror(err));
        }

        uc_fd = open_socket(SOCK_DGRAM);
        bind_or_throw(uc_fd, config.unicast_port, "unicast");
        const unsigned char ttl = 1;
        const unsigned char loop = 1;
        ::setsockopt(uc_fd, IPPROTO_IP, IP_MULTICAST_TTL, &ttl, sizeof ttl);
        ::setsockopt(uc_fd, IPPROTO_IP, IP_MULTICAST_LOOP, &loop, sizeof loop);
        if (iface.sin_addr.s_addr != htonl(INADDR_ANY))
            ::setsockopt(uc_fd, IPPROTO_IP, IP_MULTICAST_IF, &iface.sin_addr, sizeof iface.sin_addr);

        tcp_fd = open_socket(SOCK_STREAM);
        ::setsockopt(tcp_fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
        bind_or_throw(tcp_fd, config.unicast_port, "stream");
        if (::listen(tcp_fd, 16) != 0) {
            close_fd(tcp_fd);
            throw Error(Errc::PortInUse, "listen failed");
        }
    }

    void close_transport() {
        close_fd(mc_fd);
        close_fd(uc_fd);
        close_fd(tcp_fd);
    }
};

Node::Node(NodeConfig config, std::optional<std::uint64_t> seed) : impl_(std::make_unique<Impl>()) {
    config.validate();
    impl_->config = std::move(config);
    impl_->seed = seed;
    const auto& c = impl_->config;
    StackConfig sc;
    sc.device_id = c.device_id;
    sc.profile = c.profile();
    sc.go_intent = GoIntent(c.go_intent);
    sc.discovery = c.discovery;
    sc.stale_after_ms = c.stale_after_ms;
    sc.invitation_ttl_ms = c.invitation_ttl_ms;
    impl_->stack = std::make_unique<ProtocolStack>(sc, seed ? Rng(*seed) : Rng::system());
}

Node::~Node() {
    try {
        stop();
    } catch (...) {
    }
}

void Node::start() {
    auto& d = *impl_;
    if (d.running) throw Error(Errc::AlreadyRunning, "node already started");
    if (!d.config.airplane) d.open_transport();

    d.api = make_control_api(*this);
    if (d.config.api_port == 0) {
        const int port = d.api->bind_to_any_port(d.config.api_bind);
        if (port <= 0) {
            d.close_transport();
            throw Error(Errc::PortInUse, "control API could not bind");
        }
        d.api_port = static_cast<std::uint16_t>(port);
    } else {
        if (!d.api->bind_to_port(d.config.api_bind, d.config.api_port)) {
            d.close_transport();
            throw Error(Errc::PortInUse, "control API port " + std::to_string(d.config.api_port));
        }
        d.api_port = d.config.api_port;
    }

    d.io_stop = false;
    d.loop_stop = false;
    d.send_stop = false;
    d.closing = false;
    d.running = true;
    d.loop_thread = std::thread([&d] { d.loop(); });
    if (!d.config.airplane) {
        d.udp_thread = std::thread([&d] { d.udp_reader(); });
        d.accept_thread = std::thread([&d] { d.accept_loop(); });
        d.send_thread = std::thread([&d] { d.sender(); });
    }
    d.api_thread = std::thread([&d] { d.api->listen_after_bind(); });
    d.api->wait_until_ready();
    run_on_loop([](ProtocolStack& stack, TimeMs now) { stack.start_discovery(now); });
}

void Node::stop() {
    auto& d = *impl_;
    if (!d.running) return;
    d.closing = true;
    d.journal_cv.notify_all();
    d.api->stop();
    if (d.api_thread.joinable()) d.api_thread.join();
    try {
        run_on_loop([](ProtocolStack& stack, TimeMs now) {
            if (stack.group()) stack.disconnect(now);
        });
    } catch (const Error&) {
    }
    d.drain_sender(1000);
    d.running = false;
    d.journal_cv.notify_all();
    {
        std::lock_guard lk(d.loop_mu);
        d.loop_stop = true;
    }
    d.loop_cv.notify_one();
    if (d.loop_thread.joinable()) d.loop_thread.join();
    {
        std::lock_guard lk(d.send_mu);
        d.send_stop = true;
    }
    d.send_cv.notify_all();
    if (d.send_thread.joinable()) d.send_thread.join();
    d.io_stop = true;
    if (d.udp_thread.joinable()) d.udp_thread.join();
    if (d.accept_thread.joinable()) d.accept_thread.join();
    {
        std::lock_guard lk(d.readers_mu);
        for (int fd : d.reader_fds) ::shutdown(fd, SHUT_RDWR);
    }
    for (auto& t : d.readers) t.join();
    for (int fd : d.reader_fds) ::close(fd);
    d.readers.clear();
    d.reader_fds.clear();
    d.close_transport();
}

void Node::run_on_loop(const std::function<void(ProtocolStack&, TimeMs)>& fn) {
    auto& d = *impl_;
    if (!d.running) {
        std::lock_guard lk(d.loop_mu);
        fn(*d.stack, d.now());
        d.flush();
        return;
    }
    std::promise<void> done;
    auto result = done.get_future();
    d.post([&] {
        try {
            fn(*d.stack, d.now());
            done.set_value();
        } catch (...) {
            done.set_exception(std::current_exception());
        }
    });
    result.get();
}

std::vector<ControlEvent> Node::events_after(std::uint64_t after, int wait_ms) {
    auto& d = *impl_;
    std::unique_lock lk(d.journal_mu);
    auto ready = [&] { return (!d.journal.empty() && d.journal.back().seq > after) || !d.running || d.closing; };
    if (!ready() && wait_ms > 0) d.journal_cv.wait_for(lk, std::chrono::milliseconds(wait_ms), ready);
    std::vector<ControlEvent> out;
    auto it = std::upper_bound(d.journal.begin(), d.journal.end(), after,
                               [](std::uint64_t s, const ControlEvent& e) { return s < e.seq; });
    out.assign(it, d.journal.end());
    return out;
}

void Node::set_config_path(std::filesystem::path path) {
    std::lock_guard lk(impl_->config_mu);
    impl_->config_path = std::move(path);
}

void Node::update_profile(const Profile& profile) {
    encode_ssid(profile);
    run_on_loop([&](ProtocolStack& stack, TimeMs now) { stack.set_profile(profile, now); });
    std::lock_guard lk(impl_->config_mu);
    impl_->config.name = profile.name;
    impl_->config.interests = profile.interests;
    if (!impl_->config_path.empty()) save_config(impl_->config, impl_->config_path);
}

bool Node::running() const noexcept { return impl_->running && !impl_->closing; }
const NodeConfig& Node::config() const noexcept { return impl_->config; }
std::uint16_t Node::api_port() const noexcept { return impl_->api_port; }
std::uint64_t Node::datagrams_sent() const noexcept { return impl_->datagrams; }
TimeMs Node::now() const { return impl_->now(); }

}  // namespace offat
