#include "vlpfleet/host_server.hpp"

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include <array>
#include <deque>
#include <fstream>
#include <iterator>
#include <mutex>
#include <optional>
#include <thread>

namespace vlp {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

namespace {

struct Peer : std::enable_shared_from_this<Peer> {
    SessionInfo info;
    std::uint64_t out_seq{0};

    virtual ~Peer() = default;
    /// Stamps the connection's outbound sequence number and queues the message.
    virtual void deliver(WireMessage msg) = 0;
};

std::string mime_type(const std::filesystem::path& path) {
    const std::string ext = path.extension().string();
    if (ext == ".html") return "text/html; charset=utf-8";
    if (ext == ".js" || ext == ".mjs") return "text/javascript";
    if (ext == ".css") return "text/css";
    if (ext == ".json") return "application/json";
    if (ext == ".svg") return "image/svg+xml";
    if (ext == ".png") return "image/png";
    return "application/octet-stream";
}

}  // namespace

struct HostCore {
    HostOptions options;
    HostContext context;
    asio::io_context io;
    tcp::acceptor robot_acceptor{io};
    tcp::acceptor http_acceptor{io};
    std::thread thread;
    bool running{false};

    mutable std::mutex mutex;
    FleetState state;
    std::map<std::string, std::weak_ptr<Peer>> robots;
    std::vector<std::weak_ptr<Peer>> consoles;

    HostCore(HostOptions o, HostContext c) : options(std::move(o)), context(std::move(c)) {}

    void dispatch(Peer& from, const WireMessage& msg);
    void protocol_error(Peer& from, const ProtocolError& e);
    void closed(Peer& peer);
    void accept_robots();
    void accept_http();
};

namespace {

class TcpPeer final : public Peer {
public:
    TcpPeer(tcp::socket socket, HostCore& host) : socket_(std::move(socket)), host_(host) {}

    void start() { read(); }

    void deliver(WireMessage msg) override {
        if (closed_) return;
        msg.seq = ++out_seq;
        try {
            queue_.push_back(encode_message(msg));
        } catch (const ProtocolError&) {
            return;
        }
        if (queue_.size() == 1) write();
    }

private:
    void read() {
        auto self = std::static_pointer_cast<TcpPeer>(shared_from_this());
        socket_.async_read_some(asio::buffer(buf_), [this, self](boost::system::error_code ec, std::size_t n) {
            if (ec) return close();
            frames_.append(std::span<const std::uint8_t>(buf_.data(), n));
            for (;;) {
                try {
                    const auto msg = frames_.next();
                    if (!msg) break;
                    host_.dispatch(*this, *msg);
                } catch (const ProtocolError& e) {
                    host_.protocol_error(*this, e);
                    // An oversized announcement leaves no way to find the next frame.
                    if (e.code() == ProtocolErrc::PayloadTooLarge) {
                        closing_ = true;
                        if (queue_.empty()) close();
                        return;
                    }
                }
            }
            read();
        });
    }

    void write() {
        auto self = std::static_pointer_cast<TcpPeer>(shared_from_this());
        asio::async_write(socket_, asio::buffer(queue_.front()),
                          [this, self](boost::system::error_code ec, std::size_t) {
                              if (ec) return close();
                              queue_.pop_front();
                              if (!queue_.empty())
                                  write();
                              else if (closing_)
                                  close();
                          });
    }

    void close() {
        if (closed_) return;
        closed_ = true;
        boost::system::error_code ignored;
        socket_.shutdown(tcp::socket::shutdown_both, ignored);
        socket_.close(ignored);
        host_.closed(*this);
    }

    tcp::socket socket_;
    HostCore& host_;
    std::array<std::uint8_t, 8192> buf_{};
    FrameBuffer frames_;
    std::deque<std::vector<std::uint8_t>> queue_;
    bool closing_{false};
    bool closed_{false};
};

class WsPeer final : public Peer {
public:
    WsPeer(tcp::socket socket, HostCore& host) : ws_(std::move(socket)), host_(host) {}

    void start(http::request<http::string_body> req) {
        auto self = std::static_pointer_cast<WsPeer>(shared_from_this());
        ws_.text(true);
        ws_.read_message_max(kMaxFrameBytes);
        ws_.async_accept(req, [this, self](beast::error_code ec) {
            if (ec) return close();
            read();
        });
    }

    void deliver(WireMessage msg) override {
        if (closed_) return;
        msg.seq = ++out_seq;
        try {
            queue_.push_back(to_json_text(msg));
        } catch (const ProtocolError&) {
            return;
        }
        if (queue_.size() == 1) write();
    }

private:
    void read() {
        auto self = std::static_pointer_cast<WsPeer>(shared_from_this());
        ws_.async_read(buffer_, [this, self](beast::error_code ec, std::size_t) {
            if (ec) return close();
            const std::string text = beast::buffers_to_string(buffer_.data());
            buffer_.consume(buffer_.size());
            try {
                host_.dispatch(*this, from_json_text(text));
            } catch (const ProtocolError& e) {
                host_.protocol_error(*this, e);
            }
            read();
        });
    }

    void write() {
        auto self = std::static_pointer_cast<WsPeer>(shared_from_this());
        ws_.async_write(asio::buffer(queue_.front()), [this, self](beast::error_code ec, std::size_t) {
            if (ec) return close();
            queue_.pop_front();
            if (!queue_.empty()) write();
        });
    }

    void close() {
        if (closed_) return;
        closed_ = true;
        host_.closed(*this);
    }

    websocket::stream<beast::tcp_stream> ws_;
    HostCore& host_;
    beast::flat_buffer buffer_;
    std::deque<std::string> queue_;
    bool closed_{false};
};

class HttpPeer : public std::enable_shared_from_this<HttpPeer> {
public:
    HttpPeer(tcp::socket socket, HostCore& host) : stream_(std::move(socket)), host_(host) {}

    void start() { read(); }

private:
    void read() {
        req_ = {};
        stream_.expires_after(std::chrono::seconds(30));
        http::async_read(stream_, buffer_, req_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
            if (ec) return;
            self->handle();
        });
    }

    void handle() {
        if (websocket::is_upgrade(req_)) {
            if (req_.target() == "/ws") {
                stream_.expires_never();
                auto ws = std::make_shared<WsPeer>(stream_.release_socket(), host_);
                ws->start(std::move(req_));
            }
            return;
        }
        auto res = std::make_shared<http::response<http::string_body>>(respond());
        http::async_write(stream_, *res, [self = shared_from_this(), res](beast::error_code ec, std::size_t) {
            if (ec || res->need_eof()) {
                beast::error_code ignored;
                self->stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
                return;
            }
            self->read();
        });
    }

    http::response<http::string_body> respond() {
        http::response<http::string_body> res;
        res.version(req_.version());
        res.keep_alive(req_.keep_alive());
        res.set(http::field::server, "vlp-fleet-host");
        auto fail = [&](http::status status, const std::string& body) {
            res.result(status);
            res.set(http::field::content_type, "text/plain");
            res.body() = body;
            res.prepare_payload();
            return res;
        };
        if (req_.method() != http::verb::get && req_.method() != http::verb::head)
            return fail(http::status::method_not_allowed, "GET only\n");

        std::string target(req_.target());
        target = target.substr(0, target.find('?'));
        if (target.empty() || target.front() != '/') return fail(http::status::bad_request, "bad target\n");
        if (target.back() == '/') target += "index.html";
        const std::filesystem::path rel = std::filesystem::path(target.substr(1)).lexically_normal();
        for (const auto& part : rel)
            if (part == "..") return fail(http::status::forbidden, "forbidden\n");
        const std::filesystem::path file = host_.options.console_dir / rel;
        std::ifstream in(file, std::ios::binary);
        if (!in || std::filesystem::is_directory(file)) return fail(http::status::not_found, "not found\n");

        res.result(http::status::ok);
        res.set(http::field::content_type, mime_type(file));
        std::string body((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        if (req_.method() == http::verb::head) {
            res.content_length(body.size());
        } else {
            res.body() = std::move(body);
            res.prepare_payload();
        }
        return res;
    }

    beast::tcp_stream stream_;
    HostCore& host_;
    beast::flat_buffer buffer_;
    http::request<http::string_body> req_;
};

}  // namespace

void HostCore::dispatch(Peer& from, const WireMessage& msg) {
    std::vector<Outbound> outs;
    {
        const std::lock_guard lock(mutex);
        outs = session_handle(state, from.info, msg, context);
    }
    if (msg.type == MessageType::Hello) {
        if (from.info.role == Role::Robot)
            robots[from.info.robot_id] = from.weak_from_this();
        else if (from.info.role == Role::Console)
            consoles.push_back(from.weak_from_this());
    }
    for (auto& out : outs) {
        switch (out.to) {
            case Outbound::To::Sender:
                from.deliver(std::move(out.msg));
                break;
            case Outbound::To::Robot:
                if (const auto it = robots.find(out.robot_id); it != robots.end())
                    if (auto peer = it->second.lock()) peer->deliver(std::move(out.msg));
                break;
            case Outbound::To::Consoles:
                std::erase_if(consoles, [](const std::weak_ptr<Peer>& w) { return w.expired(); });
                for (const auto& w : consoles)
                    if (auto peer = w.lock()) peer->deliver(out.msg);
                break;
        }
    }
}

void HostCore::protocol_error(Peer& from, const ProtocolError& e) {
    {
        const std::lock_guard lock(mutex);
        ++state.errors_sent;
    }
    from.deliver(make_error(context.host_id, 0, to_string(e.code()), e.what()));
}

void HostCore::closed(Peer& peer) {
    {
        const std::lock_guard lock(mutex);
        session_closed(state, peer.info);
    }
    if (peer.info.role == Role::Robot) {
        const auto it = robots.find(peer.info.robot_id);
        if (it != robots.end() && it->second.lock().get() == &peer) robots.erase(it);
    }
}

void HostCore::accept_robots() {
    robot_acceptor.async_accept([this](boost::system::error_code ec, tcp::socket socket) {
        if (ec) return;
        socket.set_option(tcp::no_delay(true));
        std::make_shared<TcpPeer>(std::move(socket), *this)->start();
        accept_robots();
    });
}

void HostCore::accept_http() {
    http_acceptor.async_accept([this](boost::system::error_code ec, tcp::socket socket) {
        if (ec) return;
        std::make_shared<HttpPeer>(std::move(socket), *this)->start();
        accept_http();
    });
}

struct HostServer::Impl : HostCore {
    using HostCore::HostCore;
};

HostServer::HostServer(HostOptions options, HostContext context)
    : impl_(std::make_unique<Impl>(std::move(options), std::move(context))) {}

HostServer::~HostServer() { stop(); }

namespace {

void listen(tcp::acceptor& acceptor, const std::string& address, std::uint16_t port) {
    const tcp::endpoint endpoint(asio::ip::make_address(address), port);
    acceptor.open(endpoint.protocol());
    acceptor.set_option(asio::socket_base::reuse_address(true));
    acceptor.bind(endpoint);
    acceptor.listen();
}

}  // namespace

void HostServer::start() {
    if (impl_->running) return;
    listen(impl_->robot_acceptor, impl_->options.bind_address, impl_->options.robot_port);
    listen(impl_->http_acceptor, impl_->options.bind_address, impl_->options.http_port);
    impl_->accept_robots();
    impl_->accept_http();
    impl_->running = true;
    impl_->thread = std::thread([this] { impl_->io.run(); });
}

void HostServer::stop() {
    if (!impl_ || !impl_->running) return;
    impl_->io.stop();
    if (impl_->thread.joinable()) impl_->thread.join();
    boost::system::error_code ignored;
    impl_->robot_acceptor.close(ignored);
    impl_->http_acceptor.close(ignored);
    impl_->running = false;
}

std::uint16_t HostServer::robot_port() const { return impl_->robot_acceptor.local_endpoint().port(); }
std::uint16_t HostServer::http_port() const { return impl_->http_acceptor.local_endpoint().port(); }

FleetState HostServer::snapshot() const {
    const std::lock_guard lock(impl_->mutex);
    return impl_->state;
}

namespace {

class TcpRobotLink final : public RobotLink {
public:
    TcpRobotLink(const std::string& host, std::uint16_t port) {
        tcp::resolver resolver(io_);
        asio::connect(socket_, resolver.resolve(host, std::to_string(port)));
        socket_.set_option(tcp::no_delay(true));
    }

    void send(const WireMessage& msg) override {
        if (broken_) return;
        const auto bytes = encode_message(msg);
        boost::system::error_code ec;
        asio::write(socket_, asio::buffer(bytes), ec);
        if (ec) broken_ = true;
    }

    std::vector<WireMessage> receive() override {
        std::vector<WireMessage> out;
        if (broken_) return out;
        boost::system::error_code ec;
        for (std::size_t avail = socket_.available(ec); !ec && avail > 0; avail = socket_.available(ec)) {
            std::vector<std::uint8_t> buf(avail);
            const std::size_t n = socket_.read_some(asio::buffer(buf), ec);
            if (ec) break;
            frames_.append(std::span<const std::uint8_t>(buf.data(), n));
        }
        if (ec) broken_ = true;
        for (;;) {
            try {
                auto msg = frames_.next();
                if (!msg) break;
                out.push_back(std::move(*msg));
            } catch (const ProtocolError& e) {
                if (e.code() == ProtocolErrc::PayloadTooLarge) {
                    broken_ = true;
                    break;
                }
            }
        }
        return out;
    }

private:
    asio::io_context io_;
    tcp::socket socket_{io_};
    FrameBuffer frames_;
    bool broken_{false};
};

}  // namespace

std::unique_ptr<RobotLink> connect_robot_link(const std::string& host, std::uint16_t port) {
    return std::make_unique<TcpRobotLink>(host, port);
}

}  // namespace vlp
