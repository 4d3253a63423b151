#pragma once

// Black box living in an external executable.
//
// Wire protocol, one process per batch:
//   auditor -> stdin : CSV, header row of feature names then one row per
//                      sample, numbers in shortest round-trip decimal form
//   stdout -> auditor: exactly one decimal prediction per line, in row order
//   exit status must be 0.

#include <oproj/csv.hpp>
#include <oproj/errors.hpp>
#include <oproj/model.hpp>

#include <algorithm>
#include <atomic>
#include <cerrno>
#include <chrono>
#include <cmath>
#include <optional>
#include <csignal>
#include <cstring>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <fcntl.h>
#include <poll.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

extern char** environ;

namespace oproj {

struct SubprocessSpec
{
    std::vector<std::string> command; // argv[0] is resolved against PATH
    double timeout_seconds = 60.0;
    std::size_t max_batch_rows = 1'000'000;

    void validate() const
    {
        if (command.empty() || command.front().empty())
            throw SpecError("subprocess command is empty");
        if (!(timeout_seconds > 0.0))
            throw SpecError("subprocess timeout must be positive");
        if (max_batch_rows == 0)
            throw SpecError("max batch rows must be positive");
    }

    std::string display() const
    {
        std::string s;
        for (std::size_t i = 0; i < command.size(); ++i)
            s += (i ? " " : "") + command[i];
        return s;
    }
};

/// Splits a command line on whitespace. Single and double quotes group
/// words; backslash escapes the next character outside single quotes.
inline std::vector<std::string> split_command(std::string_view line)
{
    std::vector<std::string> out;
    std::string cur;
    bool have = false;
    char quote = 0;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quote) {
            if (c == quote)
                quote = 0;
            else if (c == '\\' && quote == '"' && i + 1 < line.size())
                cur += line[++i];
            else
                cur += c;
        } else if (c == '\'' || c == '"') {
            quote = c;
            have = true;
        } else if (c == '\\' && i + 1 < line.size()) {
            cur += line[++i];
            have = true;
        } else if (c == ' ' || c == '\t' || c == '\n') {
            if (have)
                out.push_back(std::move(cur));
            cur.clear();
            have = false;
        } else {
            cur += c;
            have = true;
        }
    }
    if (quote)
        throw SpecError("unterminated quote in command");
    if (have)
        out.push_back(std::move(cur));
    return out;
}

/// Parses the model's stdout: exactly `expected` lines, one number each.
/// A single trailing newline is allowed.
inline TargetVector parse_predictions(std::string_view text, std::size_t expected)
{
    std::vector<std::string_view> lines;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t nl = text.find('\n', pos);
        if (nl == std::string_view::npos)
            nl = text.size();
        lines.push_back(text.substr(pos, nl - pos));
        pos = nl + 1;
    }
    if (lines.size() != expected)
        throw RowCountMismatchError("model wrote " + std::to_string(lines.size()) +
                                        " prediction lines, expected " + std::to_string(expected),
                                    expected, lines.size());
    TargetVector out(expected);
    for (std::size_t i = 0; i < expected; ++i) {
        auto v = csv::parse_double(lines[i]);
        if (!v)
            throw MalformedOutputError("malformed prediction at row " + std::to_string(i) + ": '" +
                                           std::string(lines[i].substr(0, 64)) + "'",
                                       i);
        if (!std::isfinite(*v))
            throw NonFinitePredictionError("non-finite prediction at row " + std::to_string(i), i);
        out[i] = *v;
    }
    return out;
}

namespace detail {

struct ProcessResult
{
    int status = 0;
    std::string out;
    std::string err;
};

class Fd
{
public:
    Fd() = default;
    explicit Fd(int fd) : fd_(fd) {}
    Fd(Fd&& o) noexcept : fd_(std::exchange(o.fd_, -1)) {}
    Fd& operator=(Fd&& o) noexcept
    {
        reset();
        fd_ = std::exchange(o.fd_, -1);
        return *this;
    }
    ~Fd() { reset(); }
    int get() const noexcept { return fd_; }
    void reset() noexcept
    {
        if (fd_ >= 0)
            ::close(fd_);
        fd_ = -1;
    }

private:
    int fd_ = -1;
};

inline void make_pipe(Fd& r, Fd& w)
{
    int fds[2];
    if (::pipe2(fds, O_CLOEXEC) != 0)
        throw ModelLaunchError(std::string("pipe: ") + std::strerror(errno));
    r = Fd(fds[0]);
    w = Fd(fds[1]);
}

inline void ignore_sigpipe()
{
    static const bool once = [] {
        std::signal(SIGPIPE, SIG_IGN);
        return true;
    }();
    (void)once;
}

// Runs argv with `input` on stdin, collecting stdout/stderr, killing the
// child if it outlives `timeout_seconds`.
inline ProcessResult run_process(const std::vector<std::string>& argv, const std::string& input,
                                 double timeout_seconds)
{
    ignore_sigpipe();
    Fd in_r, in_w, out_r, out_w, err_r, err_w;
    make_pipe(in_r, in_w);
    make_pipe(out_r, out_w);
    make_pipe(err_r, err_w);

    posix_spawn_file_actions_t actions;
    posix_spawn_file_actions_init(&actions);
    posix_spawn_file_actions_adddup2(&actions, in_r.get(), STDIN_FILENO);
    posix_spawn_file_actions_adddup2(&actions, out_w.get(), STDOUT_FILENO);
    posix_spawn_file_actions_adddup2(&actions, err_w.get(), STDERR_FILENO);

    std::vector<char*> cargv;
    for (const auto& a : argv)
        cargv.push_back(const_cast<char*>(a.c_str()));
    cargv.push_back(nullptr);

    pid_t pid = 0;
    const int rc = ::posix_spawnp(&pid, cargv[0], &actions, nullptr, cargv.data(), environ);
    posix_spawn_file_actions_destroy(&actions);
    if (rc != 0)
        throw ModelLaunchError("cannot start model command '" + argv.front() +
                               "': " + std::strerror(rc));
    in_r.reset();
    out_w.reset();
    err_w.reset();

    ::fcntl(in_w.get(), F_SETFL, O_NONBLOCK);
    ProcessResult res;
    std::size_t written = 0;
    if (input.empty())
        in_w.reset();

    const auto deadline = std::chrono::steady_clock::now() +
                          std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                              std::chrono::duration<double>(timeout_seconds));
    char buf[65536];
    bool out_open = true, err_open = true;
    while (out_open || err_open || in_w.get() >= 0) {
        const auto now = std::chrono::steady_clock::now();
        if (now >= deadline) {
            ::kill(pid, SIGKILL);
            ::waitpid(pid, nullptr, 0);
            throw ModelTimeoutError("model command '" + argv.front() + "' timed out after " +
                                    std::to_string(timeout_seconds) + " s");
        }
        const int wait_ms = static_cast<int>(
            std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now).count() + 1);

        pollfd fds[3];
        nfds_t nfds = 0;
        int in_idx = -1, out_idx = -1, err_idx = -1;
        if (in_w.get() >= 0) {
            in_idx = static_cast<int>(nfds);
            fds[nfds++] = {in_w.get(), POLLOUT, 0};
        }
        if (out_open) {
            out_idx = static_cast<int>(nfds);
            fds[nfds++] = {out_r.get(), POLLIN, 0};
        }
        if (err_open) {
            err_idx = static_cast<int>(nfds);
            fds[nfds++] = {err_r.get(), POLLIN, 0};
        }
        const int ready = ::poll(fds, nfds, wait_ms);
        if (ready < 0) {
            if (errno == EINTR)
                continue;
            ::kill(pid, SIGKILL);
            ::waitpid(pid, nullptr, 0);
            throw ModelError(std::string("poll: ") + std::strerror(errno));
        }
        if (in_idx >= 0 && fds[in_idx].revents) {
            if (fds[in_idx].revents & (POLLERR | POLLHUP)) {
                // Child closed stdin early; its exit status decides the outcome.
                in_w.reset();
            } else {
                const ssize_t w = ::write(in_w.get(), input.data() + written, input.size() - written);
                if (w > 0) {
                    written += static_cast<std::size_t>(w);
                    if (written == input.size())
                        in_w.reset();
                } else if (w < 0 && errno != EAGAIN && errno != EINTR) {
                    in_w.reset();
                }
            }
        }
        auto drain = [&](int idx, const Fd& fd, bool& open, std::string& sink) {
            if (idx < 0 || !fds[idx].revents)
                return;
            const ssize_t r = ::read(fd.get(), buf, sizeof buf);
            if (r > 0)
                sink.append(buf, static_cast<std::size_t>(r));
            else if (r == 0 || (errno != EAGAIN && errno != EINTR))
                open = false;
        };
        drain(out_idx, out_r, out_open, res.out);
        drain(err_idx, err_r, err_open, res.err);
    }

    int status = 0;
    while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
    }
    if (WIFEXITED(status))
        res.status = WEXITSTATUS(status);
    else if (WIFSIGNALED(status))
        res.status = 128 + WTERMSIG(status);
    else
        res.status = -1;
    return res;
}

} // namespace detail

/// Batch predictor backed by an external executable; one process per batch
/// (or per max_batch_rows chunk when the batch is larger).
class SubprocessModel final : public ModelHandle
{
public:
    SubprocessModel(SubprocessSpec spec, std::vector<std::string> feature_names,
                    OutputMode mode = OutputMode::score, bool concurrent = false)
        : ModelHandle(std::move(feature_names)), spec_(std::move(spec)), mode_(mode),
          concurrent_(concurrent)
    {
        spec_.validate();
    }

    ModelKind kind() const noexcept override { return ModelKind::subprocess; }
    OutputMode output_mode() const noexcept override { return mode_; }
    bool supports_concurrent_queries() const noexcept override { return concurrent_; }

    const SubprocessSpec& spec() const noexcept { return spec_; }

    /// Number of processes launched so far.
    std::size_t invocations() const noexcept { return invocations_.load(); }

protected:
    TargetVector do_predict(const FeatureMatrix& X) const override
    {
        if (X.rows() <= spec_.max_batch_rows)
            return run_chunk(X, 0, X.rows());
        TargetVector out;
        out.reserve(X.rows());
        for (std::size_t start = 0; start < X.rows(); start += spec_.max_batch_rows) {
            const std::size_t stop = std::min(X.rows(), start + spec_.max_batch_rows);
            TargetVector part = run_chunk(X, start, stop);
            out.insert(out.end(), part.begin(), part.end());
        }
        return out;
    }

private:
    TargetVector run_chunk(const FeatureMatrix& X, std::size_t start, std::size_t stop) const
    {
        std::ostringstream os;
        for (std::size_t j = 0; j < X.cols(); ++j)
            os << (j ? "," : "") << csv::quote_field(X.column(j).name);
        os << '\n';
        for (std::size_t i = start; i < stop; ++i) {
            for (std::size_t j = 0; j < X.cols(); ++j)
                os << (j ? "," : "") << csv::format_double(X(i, j));
            os << '\n';
        }
        ++invocations_;
        const auto res = detail::run_process(spec_.command, os.str(), spec_.timeout_seconds);
        if (res.status != 0) {
            std::string msg = "model command '" + spec_.display() + "' exited with status " +
                              std::to_string(res.status);
            if (!res.err.empty())
                msg += ": " + res.err.substr(0, 512);
            throw ModelExitError(msg, res.status);
        }
        try {
            return parse_predictions(res.out, stop - start);
        } catch (ModelError& e) {
            if (start == 0)
                throw;
            // Re-anchor row indices to the full batch.
            auto row = e.row() ? std::optional<std::size_t>(*e.row() + start) : std::nullopt;
            throw ModelError(std::string(e.what()) + " (chunk starting at row " +
                                 std::to_string(start) + ")",
                             row);
        }
    }

    SubprocessSpec spec_;
    OutputMode mode_;
    bool concurrent_;
    mutable std::atomic<std::size_t> invocations_{0};
};

} // namespace oproj
