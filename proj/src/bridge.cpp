#include "center_smoothing/bridge.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <map>
#include <mutex>
#include <thread>

#include "center_smoothing/errors.hpp"

extern char** environ;

namespace csmooth {

nlohmann::json output_to_json(const OutputPoint& point) {
    using nlohmann::json;
    return std::visit(
        [](const auto& p) -> json {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, RealVector>) {
                return {{"kind", "vector"}, {"values", p.values}};
            } else if constexpr (std::is_same_v<T, Box>) {
                if (p.is_empty()) {
                    return {{"kind", "box"}, {"box", nullptr}};
                }
                return {{"kind", "box"}, {"box", {p.x_min(), p.y_min(), p.x_max(), p.y_max()}}};
            } else if constexpr (std::is_same_v<T, FiniteSet>) {
                return {{"kind", "set"}, {"elements", p.elements()}};
            } else if constexpr (std::is_same_v<T, ImageGrid>) {
                return {{"kind", "image"},
                        {"height", p.height()},
                        {"width", p.width()},
                        {"channels", p.channels()},
                        {"pixels", p.pixels()}};
            } else {
                return {{"kind", "label"}, {"id", p.id}};
            }
        },
        point);
}

OutputPoint output_from_json(const nlohmann::json& j) {
    try {
        const auto kind = j.at("kind").get<std::string>();
        if (kind == "vector") {
            return RealVector{j.at("values").get<std::vector<double>>()};
        }
        if (kind == "box") {
            const auto& b = j.at("box");
            if (b.is_null()) {
                return Box::empty();
            }
            const auto c = b.get<std::vector<double>>();
            if (c.size() != 4) {
                throw DomainError("box needs exactly four coordinates");
            }
            return Box(c[0], c[1], c[2], c[3]);
        }
        if (kind == "set") {
            return FiniteSet(j.at("elements").get<std::vector<std::int64_t>>());
        }
        if (kind == "image") {
            return ImageGrid(j.at("height").get<std::size_t>(), j.at("width").get<std::size_t>(),
                             j.at("channels").get<std::size_t>(),
                             j.at("pixels").get<std::vector<double>>());
        }
        if (kind == "label") {
            return Label{j.at("id").get<std::int64_t>()};
        }
        throw DomainError("unknown output kind '" + kind + "'");
    } catch (const nlohmann::json::exception& e) {
        throw DomainError(std::string("malformed output object: ") + e.what());
    }
}

namespace {

using Clock = std::chrono::steady_clock;

class BridgeFunction final : public BaseFunction {
public:
    explicit BridgeFunction(const BridgeSpec& spec) : spec_(spec) {
        if (spec_.argv.empty()) {
            throw DomainError("bridge: empty command");
        }
        // Writes to a dead child must surface as EPIPE, not kill us.
        ::signal(SIGPIPE, SIG_IGN);

        int to_child[2];
        int from_child[2];
        if (::pipe2(to_child, O_CLOEXEC) != 0 || ::pipe2(from_child, O_CLOEXEC) != 0) {
            throw Error(std::string("bridge: pipe failed: ") + std::strerror(errno));
        }
        posix_spawn_file_actions_t actions;
        posix_spawn_file_actions_init(&actions);
        posix_spawn_file_actions_adddup2(&actions, to_child[0], STDIN_FILENO);
        posix_spawn_file_actions_adddup2(&actions, from_child[1], STDOUT_FILENO);

        std::vector<char*> args;
        for (const auto& a : spec_.argv) {
            args.push_back(const_cast<char*>(a.c_str()));
        }
        args.push_back(nullptr);
        const int rc = ::posix_spawnp(&pid_, args[0], &actions, nullptr, args.data(), environ);
        posix_spawn_file_actions_destroy(&actions);
        ::close(to_child[0]);
        ::close(from_child[1]);
        if (rc != 0) {
            ::close(to_child[1]);
            ::close(from_child[0]);
            throw Error("bridge: cannot spawn '" + spec_.argv[0] + "': " + std::strerror(rc));
        }
        to_child_ = to_child[1];
        from_child_ = from_child[0];
        ::fcntl(to_child_, F_SETFL, ::fcntl(to_child_, F_GETFL) | O_NONBLOCK);
        ::fcntl(from_child_, F_SETFL, ::fcntl(from_child_, F_GETFL) | O_NONBLOCK);
    }

    ~BridgeFunction() override {
        if (to_child_ >= 0) ::close(to_child_);
        if (from_child_ >= 0) ::close(from_child_);
        if (pid_ > 0) {
            int status = 0;
            for (int i = 0; i < 50; ++i) {
                if (::waitpid(pid_, &status, WNOHANG) != 0) {
                    return;
                }
                std::this_thread::sleep_for(std::chrono::milliseconds(10));
            }
            ::kill(pid_, SIGKILL);
            ::waitpid(pid_, &status, 0);
        }
    }

    BridgeFunction(const BridgeFunction&) = delete;
    BridgeFunction& operator=(const BridgeFunction&) = delete;

    OutputPoint evaluate(const InputPoint& x) const override {
        return std::move(evaluate_batch(std::span<const InputPoint>(&x, 1)).front());
    }

    std::vector<OutputPoint> evaluate_batch(std::span<const InputPoint> points) const override {
        std::lock_guard lock(mutex_);
        if (broken_) {
            throw EvaluationError("bridge: process unusable after earlier failure: " + broken_reason_, -1);
        }
        try {
            return exchange(points);
        } catch (const EvaluationError& e) {
            broken_ = true;
            broken_reason_ = e.what();
            throw;
        }
    }

    OutputKind output_kind() const noexcept override { return spec_.output_kind; }
    std::optional<std::size_t> input_dimension() const noexcept override { return spec_.input_dimension; }
    bool single_flight() const noexcept override { return true; }

private:
    std::vector<OutputPoint> exchange(std::span<const InputPoint> points) const {
        if (points.empty()) {
            return {};
        }
        const std::int64_t first_id = next_id_;
        next_id_ += static_cast<std::int64_t>(points.size());

        std::string outbox;
        std::vector<std::size_t> line_end;  // offset just past each request line
        for (std::size_t i = 0; i < points.size(); ++i) {
            if (spec_.input_dimension && points[i].dimension() != *spec_.input_dimension) {
                throw EvaluationError("bridge: input " + std::to_string(i) + " has wrong dimension",
                                      first_id + static_cast<std::int64_t>(i));
            }
            nlohmann::json req = {{"id", first_id + static_cast<std::int64_t>(i)},
                                  {"input", points[i].values}};
            outbox += req.dump();
            outbox += '\n';
            line_end.push_back(outbox.size());
        }

        std::vector<std::optional<OutputPoint>> results(points.size());
        std::vector<Clock::time_point> sent_at(points.size(), Clock::time_point::max());
        std::size_t written = 0;
        std::size_t next_sent = 0;
        std::size_t received = 0;

        auto lowest_pending = [&]() -> std::int64_t {
            for (std::size_t i = 0; i < results.size(); ++i) {
                if (!results[i]) return first_id + static_cast<std::int64_t>(i);
            }
            return first_id;
        };

        while (received < points.size()) {
            const auto now = Clock::now();
            for (std::size_t i = 0; i < points.size(); ++i) {
                if (!results[i] && sent_at[i] != Clock::time_point::max() &&
                    now - sent_at[i] > spec_.timeout) {
                    throw EvaluationError("bridge: request " + std::to_string(first_id + static_cast<std::int64_t>(i)) +
                                              " timed out",
                                          first_id + static_cast<std::int64_t>(i));
                }
            }

            pollfd fds[2] = {{from_child_, POLLIN, 0}, {to_child_, POLLOUT, 0}};
            const nfds_t nfds = written < outbox.size() ? 2 : 1;
            if (::poll(fds, nfds, 50) < 0) {
                if (errno == EINTR) continue;
                throw EvaluationError(std::string("bridge: poll failed: ") + std::strerror(errno), lowest_pending());
            }

            if (nfds == 2 && (fds[1].revents & (POLLOUT | POLLERR | POLLHUP))) {
                const ssize_t n = ::write(to_child_, outbox.data() + written, outbox.size() - written);
                if (n < 0 && errno != EAGAIN && errno != EINTR) {
                    throw EvaluationError("bridge: process closed its input while request " +
                                              std::to_string(lowest_pending()) + " was pending",
                                          lowest_pending());
                }
                if (n > 0) {
                    written += static_cast<std::size_t>(n);
                    const auto t = Clock::now();
                    while (next_sent < line_end.size() && line_end[next_sent] <= written) {
                        sent_at[next_sent++] = t;
                    }
                }
            }

            if (fds[0].revents & (POLLIN | POLLHUP | POLLERR)) {
                char buf[65536];
                const ssize_t n = ::read(from_child_, buf, sizeof buf);
                if (n == 0) {
                    const auto id = lowest_pending();
                    throw EvaluationError("bridge: process exited" + exit_description() + " while request " +
                                              std::to_string(id) + " was pending",
                                          id);
                }
                if (n < 0) {
                    if (errno == EAGAIN || errno == EINTR) continue;
                    throw EvaluationError(std::string("bridge: read failed: ") + std::strerror(errno),
                                          lowest_pending());
                }
                inbox_.append(buf, static_cast<std::size_t>(n));
                std::size_t pos;
                while ((pos = inbox_.find('\n')) != std::string::npos) {
                    const std::string line = inbox_.substr(0, pos);
                    inbox_.erase(0, pos + 1);
                    if (line.find_first_not_of(" \t\r") == std::string::npos) {
                        continue;
                    }
                    accept_response(line, first_id, results, received, lowest_pending());
                }
            }
        }

        std::vector<OutputPoint> out;
        out.reserve(results.size());
        for (auto& r : results) {
            out.push_back(std::move(*r));
        }
        return out;
    }

    void accept_response(const std::string& line, std::int64_t first_id,
                         std::vector<std::optional<OutputPoint>>& results, std::size_t& received,
                         std::int64_t pending_id) const {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception&) {
            throw EvaluationError("bridge: malformed response while request " + std::to_string(pending_id) +
                                      " was pending: " + line.substr(0, 200),
                                  pending_id);
        }
        if (!j.is_object() || !j.contains("id") || !j["id"].is_number_integer()) {
            throw EvaluationError("bridge: response without integer id while request " +
                                      std::to_string(pending_id) + " was pending",
                                  pending_id);
        }
        const auto id = j["id"].get<std::int64_t>();
        const auto slot = id - first_id;
        if (slot < 0 || slot >= static_cast<std::int64_t>(results.size()) ||
            results[static_cast<std::size_t>(slot)]) {
            throw EvaluationError("bridge: unexpected response id " + std::to_string(id), id);
        }
        if (j.contains("error")) {
            throw EvaluationError("bridge: request " + std::to_string(id) + " failed: " + j["error"].dump(), id);
        }
        if (!j.contains("output")) {
            throw EvaluationError("bridge: response " + std::to_string(id) + " has no output", id);
        }
        OutputPoint point;
        try {
            point = output_from_json(j["output"]);
        } catch (const Error& e) {
            throw EvaluationError("bridge: response " + std::to_string(id) + ": " + e.what(), id);
        }
        if (kind_of(point) != spec_.output_kind) {
            throw EvaluationError("bridge: response " + std::to_string(id) + " has kind " +
                                      std::string(to_string(kind_of(point))) + ", expected " +
                                      std::string(to_string(spec_.output_kind)),
                                  id);
        }
        results[static_cast<std::size_t>(slot)] = std::move(point);
        ++received;
    }

    std::string exit_description() const {
        int status = 0;
        for (int i = 0; i < 20; ++i) {
            const pid_t r = ::waitpid(pid_, &status, WNOHANG);
            if (r == pid_) {
                pid_ = -1;
                if (WIFEXITED(status)) return " with status " + std::to_string(WEXITSTATUS(status));
                if (WIFSIGNALED(status)) return " on signal " + std::to_string(WTERMSIG(status));
                return "";
            }
            std::this_thread::sleep_for(std::chrono::milliseconds(5));
        }
        return "";
    }

    BridgeSpec spec_;
    mutable pid_t pid_ = -1;
    int to_child_ = -1;
    int from_child_ = -1;
    mutable std::mutex mutex_;
    mutable std::int64_t next_id_ = 0;
    mutable std::string inbox_;
    mutable bool broken_ = false;
    mutable std::string broken_reason_;
};

}  // namespace

BaseFunctionPtr bridge_function(const BridgeSpec& spec) {
    return std::make_shared<BridgeFunction>(spec);
}

}  // namespace csmooth
