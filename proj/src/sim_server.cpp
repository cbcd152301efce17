#include "swarmguide/sim_server.hpp"

#include <deque>
#include <map>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

namespace swarmguide {

namespace beast = boost::beast;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;

namespace {

// Events (tactile frames, replies) queued per client before the oldest is dropped.
constexpr std::size_t kMaxQueuedEvents = 256;

}  // namespace

class SimServer::Impl : public MessageSink {
public:
    class Session;

    Impl(const WorldConfig& config, const Eigen::Vector3d& spawn_hand, ServerOptions options)
        : options_(std::move(options)),
          host_(config, spawn_hand, *this, options_.host),
          loop_(host_),
          acceptor_(ioc_),
          rate_hz_(config.rate_hz)
    {
    }

    ~Impl() override { stop(); }

    void start()
    {
        const tcp::endpoint endpoint(net::ip::make_address(options_.address), options_.port);
        acceptor_.open(endpoint.protocol());
        acceptor_.set_option(net::socket_base::reuse_address(true));
        acceptor_.bind(endpoint);
        acceptor_.listen(net::socket_base::max_listen_connections);
        port_ = acceptor_.local_endpoint().port();
        do_accept();
        io_thread_ = std::thread([this] { ioc_.run(); });
        loop_.start();
        started_ = true;
    }

    void stop()
    {
        if (!started_) {
            return;
        }
        started_ = false;
        loop_.stop();
        ioc_.stop();
        if (io_thread_.joinable()) {
            io_thread_.join();
        }
        beast::error_code ec;
        acceptor_.close(ec);
        sessions_.clear();
    }

    std::uint16_t port() const { return port_; }
    std::vector<std::chrono::steady_clock::time_point> tick_times() const
    {
        return loop_.tick_times();
    }
    const SimulationHost& host() const { return host_; }

    // MessageSink, called from the loop thread.
    void broadcast_state(SharedText message) override;
    void broadcast_event(SharedText message) override;
    void send_to(ClientId client, SharedText message) override;

    // io thread only below.
    void on_open(ClientId id);
    void on_message(ClientId id, const std::string& text);
    void on_close(ClientId id);

private:
    void do_accept();
    void reply(ClientId id, const std::string& text);

    ServerOptions options_;
    SimulationHost host_;
    RealtimeLoop loop_;

    net::io_context ioc_;
    tcp::acceptor acceptor_;
    std::thread io_thread_;
    std::uint16_t port_ = 0;
    bool started_ = false;
    double rate_hz_;

    std::map<ClientId, std::shared_ptr<Session>> sessions_;
    ClientId next_client_ = 1;
    ClientId hand_owner_ = 0;
};

class SimServer::Impl::Session : public std::enable_shared_from_this<Session> {
public:
    Session(tcp::socket socket, Impl& server, ClientId id)
        : ws_(std::move(socket)), server_(server), id_(id)
    {
    }

    void start()
    {
        ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
        ws_.async_accept(beast::bind_front_handler(&Session::on_accept, shared_from_this()));
    }

    void queue_state(SharedText message)
    {
        // Latest wins: an unsent state is replaced, never reordered.
        pending_state_ = std::move(message);
        maybe_write();
    }

    void queue_event(SharedText message)
    {
        events_.push_back(std::move(message));
        if (events_.size() > kMaxQueuedEvents) {
            events_.pop_front();
        }
        maybe_write();
    }

private:
    void on_accept(beast::error_code ec)
    {
        if (ec) {
            server_.on_close(id_);
            return;
        }
        open_ = true;
        server_.on_open(id_);
        do_read();
    }

    void do_read()
    {
        ws_.async_read(buffer_, beast::bind_front_handler(&Session::on_read, shared_from_this()));
    }

    void on_read(beast::error_code ec, std::size_t)
    {
        if (ec) {
            open_ = false;
            server_.on_close(id_);
            return;
        }
        const auto text = beast::buffers_to_string(buffer_.data());
        buffer_.consume(buffer_.size());
        server_.on_message(id_, text);
        do_read();
    }

    void maybe_write()
    {
        if (writing_ || !open_) {
            return;
        }
        if (!events_.empty()) {
            current_ = std::move(events_.front());
            events_.pop_front();
        } else if (pending_state_) {
            current_ = std::move(pending_state_);
            pending_state_.reset();
        } else {
            return;
        }
        writing_ = true;
        ws_.text(true);
        ws_.async_write(net::buffer(*current_),
                        beast::bind_front_handler(&Session::on_write, shared_from_this()));
    }

    void on_write(beast::error_code ec, std::size_t)
    {
        writing_ = false;
        current_.reset();
        if (ec) {
            open_ = false;
            return;
        }
        maybe_write();
    }

    websocket::stream<beast::tcp_stream> ws_;
    Impl& server_;
    ClientId id_;
    beast::flat_buffer buffer_;
    bool open_ = false;
    bool writing_ = false;
    SharedText current_;
    SharedText pending_state_;
    std::deque<SharedText> events_;
};

void SimServer::Impl::broadcast_state(SharedText message)
{
    net::post(ioc_, [this, message] {
        for (auto& [id, session] : sessions_) {
            session->queue_state(message);
        }
    });
}

void SimServer::Impl::broadcast_event(SharedText message)
{
    net::post(ioc_, [this, message] {
        for (auto& [id, session] : sessions_) {
            session->queue_event(message);
        }
    });
}

void SimServer::Impl::send_to(ClientId client, SharedText message)
{
    net::post(ioc_, [this, client, message] {
        if (auto it = sessions_.find(client); it != sessions_.end()) {
            it->second->queue_event(message);
        }
    });
}

void SimServer::Impl::do_accept()
{
    acceptor_.async_accept(net::make_strand(ioc_), [this](beast::error_code ec, tcp::socket socket) {
        if (ec) {
            return;
        }
        const ClientId id = next_client_++;
        auto session = std::make_shared<Session>(std::move(socket), *this, id);
        sessions_.emplace(id, session);
        session->start();
        do_accept();
    });
}

void SimServer::Impl::reply(ClientId id, const std::string& text)
{
    if (auto it = sessions_.find(id); it != sessions_.end()) {
        it->second->queue_event(std::make_shared<const std::string>(text));
    }
}

void SimServer::Impl::on_open(ClientId id)
{
    if (hand_owner_ == 0) {
        hand_owner_ = id;
    }
    reply(id, nlohmann::json{{"type", "hello"},
                             {"client", id},
                             {"role", hand_owner_ == id ? "hand" : "observer"},
                             {"rate_hz", rate_hz_},
                             {"rate_div", options_.host.rate_div}}
                  .dump());
}

void SimServer::Impl::on_message(ClientId id, const std::string& text)
{
    InputMessage message;
    try {
        message = decode_input(text);
    } catch (const ProtocolError& e) {
        reply(id, nlohmann::json{{"type", "error"}, {"reason", e.what()}}.dump());
        return;
    }
    if (hand_owner_ == 0) {
        hand_owner_ = id;
        reply(id, nlohmann::json{{"type", "role"}, {"role", "hand"}}.dump());
    }
    if (hand_owner_ != id) {
        reply(id, nlohmann::json{{"type", "error"},
                                 {"reason", "input rejected: another client holds the hand role"}}
                      .dump());
        return;
    }
    host_.enqueue(id, std::move(message));
}

void SimServer::Impl::on_close(ClientId id)
{
    sessions_.erase(id);
    if (hand_owner_ == id) {
        hand_owner_ = 0;
    }
}

SimServer::SimServer(const WorldConfig& config, const Eigen::Vector3d& spawn_hand,
                     ServerOptions options)
    : impl_(std::make_unique<Impl>(config, spawn_hand, std::move(options)))
{
}

SimServer::~SimServer() = default;

void SimServer::start()
{
    impl_->start();
}

void SimServer::stop()
{
    impl_->stop();
}

std::uint16_t SimServer::port() const
{
    return impl_->port();
}

std::vector<std::chrono::steady_clock::time_point> SimServer::tick_times() const
{
    return impl_->tick_times();
}

const SimulationHost& SimServer::host() const
{
    return impl_->host();
}

}  // namespace swarmguide
