#include <chrono>
#include <deque>
#include <stdexcept>
#include <thread>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include "sonicgrid/session.hpp"

namespace sonicgrid {

namespace net = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = net::ip::tcp;
using Clock = std::chrono::steady_clock;

namespace {

constexpr int kMaxAudioCatchUp = 8;
constexpr int kAudioPrebuffer = 2;

class Connection : public std::enable_shared_from_this<Connection> {
 public:
  Connection(tcp::socket socket, std::shared_ptr<const SessionConfig> cfg, std::string id)
      : ws_(std::move(socket)),
        tick_timer_(ws_.get_executor()),
        audio_timer_(ws_.get_executor()),
        session_(cfg, std::move(id)),
        tick_period_(std::chrono::milliseconds(cfg->tick_ms)),
        audio_period_(std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(
            static_cast<double>(cfg->pipeline.audio.block_frames) / cfg->pipeline.audio.sample_rate))) {}

  void run() {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept(beast::bind_front_handler(&Connection::on_accept, shared_from_this()));
  }

  void abort() {
    if (dead_) return;
    dead_ = true;
    session_.disconnect();
    tick_timer_.cancel();
    audio_timer_.cancel();
    beast::error_code ec;
    beast::get_lowest_layer(ws_).socket().close(ec);
  }

 private:
  void on_accept(beast::error_code ec) {
    if (ec) return abort();
    read();
  }

  void read() {
    ws_.async_read(buffer_, beast::bind_front_handler(&Connection::on_read, shared_from_this()));
  }

  void on_read(beast::error_code ec, std::size_t) {
    if (ec) return abort();
    const std::string text = beast::buffers_to_string(buffer_.data());
    buffer_.consume(buffer_.size());
    const bool was_streaming = session_.streaming();
    enqueue(session_.handle_text(text));
    if (!was_streaming && session_.streaming()) start_timers();
    if (session_.close_requested()) {
      close_after_flush_ = true;
      maybe_close();
      return;
    }
    read();
  }

  void start_timers() {
    const auto now = Clock::now();
    for (int i = 0; i < kAudioPrebuffer; ++i) enqueue({session_.audio_chunk()});
    next_audio_ = now + audio_period_;
    next_tick_ = now + tick_period_;
    arm_tick();
    arm_audio();
  }

  void arm_tick() {
    tick_timer_.expires_at(next_tick_);
    tick_timer_.async_wait(beast::bind_front_handler(&Connection::on_tick, shared_from_this()));
  }

  void arm_audio() {
    audio_timer_.expires_at(next_audio_);
    audio_timer_.async_wait(beast::bind_front_handler(&Connection::on_audio, shared_from_this()));
  }

  void on_tick(beast::error_code ec) {
    if (ec || dead_ || closing_) return;
    enqueue(session_.tick());
    if (session_.close_requested()) {
      close_after_flush_ = true;
      maybe_close();
      return;
    }
    if (session_.phase() != Phase::running) return;
    next_tick_ += tick_period_;
    arm_tick();
  }

  void on_audio(beast::error_code ec) {
    if (ec || dead_ || closing_) return;
    const auto now = Clock::now();
    int sent = 0;
    while (next_audio_ <= now && sent < kMaxAudioCatchUp) {
      enqueue({session_.audio_chunk()});
      next_audio_ += audio_period_;
      ++sent;
    }
    if (next_audio_ <= now) next_audio_ = now + audio_period_;
    arm_audio();
  }

  void enqueue(std::vector<Outgoing> msgs) {
    if (dead_) return;
    for (Outgoing& m : msgs) queue_.push_back(std::move(m));
    if (!writing_ && !queue_.empty()) write_next();
  }

  void write_next() {
    writing_ = true;
    const Outgoing& m = queue_.front();
    ws_.binary(m.binary);
    auto cb = beast::bind_front_handler(&Connection::on_write, shared_from_this());
    if (m.binary)
      ws_.async_write(net::buffer(m.bytes), std::move(cb));
    else
      ws_.async_write(net::buffer(m.text), std::move(cb));
  }

  void on_write(beast::error_code ec, std::size_t) {
    if (ec) return abort();
    queue_.pop_front();
    if (!queue_.empty() && !dead_) return write_next();
    writing_ = false;
    maybe_close();
  }

  void maybe_close() {
    if (!close_after_flush_ || writing_ || closing_ || dead_) return;
    closing_ = true;
    tick_timer_.cancel();
    audio_timer_.cancel();
    ws_.async_close(websocket::close_code::normal,
                    beast::bind_front_handler(&Connection::on_close, shared_from_this()));
  }

  void on_close(beast::error_code) {
    session_.disconnect();
    dead_ = true;
  }

  websocket::stream<beast::tcp_stream> ws_;
  beast::flat_buffer buffer_;
  net::steady_timer tick_timer_;
  net::steady_timer audio_timer_;
  Session session_;
  Clock::duration tick_period_;
  Clock::duration audio_period_;
  Clock::time_point next_tick_;
  Clock::time_point next_audio_;
  std::deque<Outgoing> queue_;
  bool writing_ = false;
  bool close_after_flush_ = false;
  bool closing_ = false;
  bool dead_ = false;
};

}  // namespace

struct Server::Impl {
  ServeConfig cfg;
  net::io_context ioc{1};
  tcp::acceptor acceptor{ioc};
  std::thread thread;
  std::vector<std::weak_ptr<Connection>> connections;
  std::uint64_t counter = 0;
  std::string id_prefix;

  explicit Impl(ServeConfig c) : cfg(std::move(c)) {
    if (!cfg.session) throw std::invalid_argument("session config is null");
    beast::error_code ec;
    const auto address = net::ip::make_address(cfg.address, ec);
    if (ec) throw std::runtime_error("bad listen address '" + cfg.address + "'");
    const tcp::endpoint ep(address, cfg.port);
    acceptor.open(ep.protocol(), ec);
    if (!ec) acceptor.set_option(net::socket_base::reuse_address(true), ec);
    if (!ec) acceptor.bind(ep, ec);
    if (!ec) acceptor.listen(net::socket_base::max_listen_connections, ec);
    if (ec)
      throw std::runtime_error("cannot listen on " + cfg.address + ":" + std::to_string(cfg.port) + ": " +
                               ec.message());
    const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
        std::chrono::system_clock::now().time_since_epoch());
    id_prefix = "session_" + std::to_string(ms.count()) + "_";
  }

  void accept() {
    acceptor.async_accept(net::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
      if (ec) return;
      auto conn = std::make_shared<Connection>(std::move(socket), cfg.session, id_prefix + std::to_string(counter++));
      std::erase_if(connections, [](const auto& w) { return w.expired(); });
      connections.push_back(conn);
      conn->run();
      accept();
    });
  }
};

Server::Server(ServeConfig cfg) : impl_(std::make_unique<Impl>(std::move(cfg))) {}

Server::~Server() { stop(); }

unsigned short Server::port() const { return impl_->acceptor.local_endpoint().port(); }

void Server::run() {
  impl_->accept();
  impl_->ioc.run();
}

void Server::start() {
  impl_->thread = std::thread([this] { run(); });
}

void Server::stop() {
  net::post(impl_->ioc, [impl = impl_.get()] {
    beast::error_code ec;
    impl->acceptor.close(ec);
    for (auto& w : impl->connections)
      if (auto c = w.lock()) c->abort();
    impl->ioc.stop();
  });
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace sonicgrid
