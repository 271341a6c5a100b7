#pragma once

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cerrno>
#include <cstring>
#include <mutex>
#include <string>
#include <vector>

#include "flexcf/common.hpp"
#include "flexcf/dataset.hpp"
#include "flexcf/model.hpp"

namespace flexcf {

/// Adapter for an external classifier run as a child process.
///
/// Wire protocol, line oriented over stdin/stdout:
///   child -> "FLEXCF-PREDICT 1"            handshake on startup
///   us    -> one flat JSON array of feature values per instance
///   child -> "0" or "1" per request line
///
/// Access is serialized: one in-flight batch at a time. Child failures are
/// surfaced as ProtocolError, never as fabricated predictions.
class ExternalPredictor : public Predictor {
public:
    explicit ExternalPredictor(std::string command, std::chrono::milliseconds batch_timeout =
                                                        std::chrono::milliseconds(30000))
        : command_(std::move(command)), batch_timeout_(batch_timeout) {
        static std::once_flag sigpipe_once;
        std::call_once(sigpipe_once, [] { ::signal(SIGPIPE, SIG_IGN); });
        start_child();
        const auto deadline = std::chrono::steady_clock::now() + batch_timeout_;
        const std::string hello = read_line(deadline);
        if (hello != "FLEXCF-PREDICT 1")
            throw ProtocolError("external predictor: bad handshake line: '" + hello + "'");
    }

    ~ExternalPredictor() override { stop_child(); }

    ExternalPredictor(const ExternalPredictor&) = delete;
    ExternalPredictor& operator=(const ExternalPredictor&) = delete;

    int predict(const Instance& x) const override { return predict_batch({x})[0]; }

    std::vector<int> predict_batch(const std::vector<Instance>& xs) const override {
        std::lock_guard<std::mutex> lock(io_mutex_);
        const auto deadline = std::chrono::steady_clock::now() + batch_timeout_;
        std::vector<int> out;
        out.reserve(xs.size());
        for (const auto& x : xs) {
            write_line(encode_request(x));
            const std::string reply = read_line(deadline);
            if (reply == "0") out.push_back(0);
            else if (reply == "1") out.push_back(1);
            else throw ProtocolError("external predictor: malformed response line: '" + reply + "'");
        }
        return out;
    }

    std::string name() const override { return "external"; }

    static std::string encode_request(const Instance& x) {
        std::string line = "[";
        for (std::size_t j = 0; j < x.size(); ++j) {
            if (j) line += ',';
            line += format_double(x[j]);
        }
        line += ']';
        return line;
    }

private:
    void start_child() {
        int to_child[2], from_child[2];
        if (::pipe(to_child) != 0 || ::pipe(from_child) != 0)
            throw ProtocolError("external predictor: pipe() failed");
        pid_ = ::fork();
        if (pid_ < 0) throw ProtocolError("external predictor: fork() failed");
        if (pid_ == 0) {
            ::dup2(to_child[0], STDIN_FILENO);
            ::dup2(from_child[1], STDOUT_FILENO);
            ::close(to_child[0]);
            ::close(to_child[1]);
            ::close(from_child[0]);
            ::close(from_child[1]);
            ::execl("/bin/sh", "sh", "-c", command_.c_str(), static_cast<char*>(nullptr));
            _exit(127);
        }
        ::close(to_child[0]);
        ::close(from_child[1]);
        write_fd_ = to_child[1];
        read_fd_ = from_child[0];
    }

    void stop_child() {
        if (write_fd_ >= 0) ::close(write_fd_);
        if (read_fd_ >= 0) ::close(read_fd_);
        write_fd_ = read_fd_ = -1;
        if (pid_ > 0) {
            int status = 0;
            if (::waitpid(pid_, &status, WNOHANG) == 0) {
                ::kill(pid_, SIGTERM);
                ::waitpid(pid_, &status, 0);
            }
            pid_ = -1;
        }
    }

    void write_line(const std::string& line) const {
        std::string buf = line + "\n";
        std::size_t off = 0;
        while (off < buf.size()) {
            const ssize_t n = ::write(write_fd_, buf.data() + off, buf.size() - off);
            if (n < 0) {
                if (errno == EINTR) continue;
                throw ProtocolError(std::string("external predictor: child not accepting input (") +
                                    std::strerror(errno) + ")");
            }
            off += static_cast<std::size_t>(n);
        }
    }

    std::string read_line(std::chrono::steady_clock::time_point deadline) const {
        for (;;) {
            const auto nl = read_buffer_.find('\n');
            if (nl != std::string::npos) {
                std::string line = read_buffer_.substr(0, nl);
                read_buffer_.erase(0, nl + 1);
                if (!line.empty() && line.back() == '\r') line.pop_back();
                return line;
            }
            const auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(
                deadline - std::chrono::steady_clock::now());
            if (remaining.count() <= 0) throw ProtocolError("external predictor: timeout waiting for response");
            struct pollfd pfd{read_fd_, POLLIN, 0};
            const int pr = ::poll(&pfd, 1, static_cast<int>(remaining.count()));
            if (pr < 0) {
                if (errno == EINTR) continue;
                throw ProtocolError("external predictor: poll() failed");
            }
            if (pr == 0) throw ProtocolError("external predictor: timeout waiting for response");
            char chunk[4096];
            const ssize_t n = ::read(read_fd_, chunk, sizeof(chunk));
            if (n < 0) {
                if (errno == EINTR) continue;
                throw ProtocolError("external predictor: read() failed");
            }
            if (n == 0) throw ProtocolError("external predictor: child exited before responding");
            read_buffer_.append(chunk, static_cast<std::size_t>(n));
        }
    }

    std::string command_;
    std::chrono::milliseconds batch_timeout_;
    pid_t pid_ = -1;
    int write_fd_ = -1;
    int read_fd_ = -1;
    mutable std::mutex io_mutex_;
    mutable std::string read_buffer_;
};

inline std::shared_ptr<Predictor> external_predictor(const std::string& command,
                                                     std::chrono::milliseconds batch_timeout =
                                                         std::chrono::milliseconds(30000)) {
    return std::make_shared<ExternalPredictor>(command, batch_timeout);
}

}  // namespace flexcf
