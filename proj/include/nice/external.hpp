#pragma once

// Clients for models that live outside this process. Both transports speak the
// same newline-free JSON bodies:
//
//   request:  {"instances": [[v, ...], ...]}   categorical -> string, numerical -> number
//   response: {"scores": [p, ...]}             one probability of class 1 per instance
//
// Subprocess: one request line on the child's stdin, one response line on its stdout.
// HTTP: POST with content-type application/json.

#include <atomic>
#include <csignal>
#include <cstdio>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <fcntl.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <httplib.h>
#include <json.hpp>

#include "nice/classifier.hpp"
#include "nice/error.hpp"
#include "nice/json_io.hpp"

namespace nicecf {

struct EndpointSpec {
    enum class Transport { Subprocess, Http };

    Transport transport = Transport::Subprocess;
    std::string target;  // shell command or URL
    std::size_t batch_size = 1000;
    int timeout_seconds = 60;

    static EndpointSpec subprocess(std::string command, std::size_t batch = 1000) {
        return {Transport::Subprocess, std::move(command), batch};
    }
    static EndpointSpec http(std::string url, std::size_t batch = 1000) {
        return {Transport::Http, std::move(url), batch};
    }
};

inline std::string make_score_request(std::span<const Instance> xs) {
    nlohmann::json instances = nlohmann::json::array();
    for (const auto& x : xs) instances.push_back(instance_to_json(x));
    return nlohmann::json{{"instances", std::move(instances)}}.dump();
}

inline std::vector<double> parse_score_response(const std::string& body, std::size_t expected,
                                                const std::string& who) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(body);
    } catch (const nlohmann::json::exception& e) {
        throw ModelIOError(who + ": malformed response: " + e.what());
    }
    if (!j.is_object() || !j.contains("scores") || !j["scores"].is_array()) {
        throw ModelIOError(who + ": response lacks a 'scores' array");
    }
    const auto& arr = j["scores"];
    if (arr.size() != expected) {
        throw ModelIOError(who + ": expected " + std::to_string(expected) + " scores, got " + std::to_string(arr.size()));
    }
    std::vector<double> out;
    out.reserve(expected);
    for (const auto& s : arr) {
        if (!s.is_number()) throw ModelIOError(who + ": non-numeric score " + s.dump());
        const double p = s.get<double>();
        if (!(p >= 0.0 && p <= 1.0)) throw ModelIOError(who + ": score " + s.dump() + " outside [0, 1]");
        out.push_back(p);
    }
    return out;
}

/// Base for transports: splits work into batches and serializes access.
class ExternalClassifier : public Classifier {
public:
    explicit ExternalClassifier(std::size_t batch_size) : batch_size_(batch_size == 0 ? 1 : batch_size) {}

    std::vector<double> score_batch(std::span<const Instance> xs) const override {
        std::lock_guard lock(mutex_);
        std::vector<double> out;
        out.reserve(xs.size());
        for (std::size_t from = 0; from < xs.size(); from += batch_size_) {
            const auto chunk = xs.subspan(from, std::min(batch_size_, xs.size() - from));
            const auto body = roundtrip(make_score_request(chunk));
            ++requests_;
            auto scores = parse_score_response(body, chunk.size(), descriptor());
            out.insert(out.end(), scores.begin(), scores.end());
        }
        return out;
    }

    std::size_t requests() const noexcept { return requests_.load(); }
    std::size_t batch_size() const noexcept { return batch_size_; }

protected:
    virtual std::string roundtrip(const std::string& request) const = 0;

private:
    std::size_t batch_size_;
    mutable std::mutex mutex_;
    mutable std::atomic<std::size_t> requests_{0};
};

/// Child process started with `/bin/sh -c command`, kept alive for the handle's lifetime.
class SubprocessClassifier final : public ExternalClassifier {
public:
    SubprocessClassifier(std::string command, std::size_t batch_size)
        : ExternalClassifier(batch_size), command_(std::move(command)) {
        // A child that exits early must surface as ModelIOError, not kill us.
        std::signal(SIGPIPE, SIG_IGN);
        int to_child[2];
        int from_child[2];
        if (pipe2(to_child, O_CLOEXEC) != 0) throw ModelIOError("proc:" + command_ + ": pipe failed");
        if (pipe2(from_child, O_CLOEXEC) != 0) {
            close(to_child[0]);
            close(to_child[1]);
            throw ModelIOError("proc:" + command_ + ": pipe failed");
        }
        pid_ = fork();
        if (pid_ < 0) throw ModelIOError("proc:" + command_ + ": fork failed");
        if (pid_ == 0) {
            dup2(to_child[0], STDIN_FILENO);
            dup2(from_child[1], STDOUT_FILENO);
            execl("/bin/sh", "sh", "-c", command_.c_str(), static_cast<char*>(nullptr));
            _exit(127);
        }
        close(to_child[0]);
        close(from_child[1]);
        in_ = fdopen(to_child[1], "w");
        out_ = fdopen(from_child[0], "r");
    }

    SubprocessClassifier(const SubprocessClassifier&) = delete;
    SubprocessClassifier& operator=(const SubprocessClassifier&) = delete;

    ~SubprocessClassifier() override {
        if (in_) std::fclose(in_);
        if (out_) std::fclose(out_);
        if (pid_ > 0) {
            int status = 0;
            for (int i = 0; i < 200; ++i) {
                if (waitpid(pid_, &status, WNOHANG) != 0) return;
                usleep(10000);
            }
            kill(pid_, SIGTERM);
            waitpid(pid_, &status, 0);
        }
    }

    std::string descriptor() const override { return "proc:" + command_; }

protected:
    std::string roundtrip(const std::string& request) const override {
        if (std::fputs(request.c_str(), in_) == EOF || std::fputc('\n', in_) == EOF || std::fflush(in_) != 0) {
            throw ModelIOError(descriptor() + ": failed to write request (process exited?)");
        }
        std::string line;
        for (int c; (c = std::fgetc(out_)) != EOF;) {
            if (c == '\n') return line;
            line.push_back(static_cast<char>(c));
        }
        throw ModelIOError(descriptor() + ": process closed its output before responding");
    }

private:
    std::string command_;
    pid_t pid_ = -1;
    std::FILE* in_ = nullptr;
    std::FILE* out_ = nullptr;
};

class HttpClassifier final : public ExternalClassifier {
public:
    HttpClassifier(std::string url, std::size_t batch_size, int timeout_seconds)
        : ExternalClassifier(batch_size), url_(std::move(url)) {
        const auto scheme = url_.find("://");
        if (scheme == std::string::npos) throw ModelIOError("http:" + url_ + ": URL needs a scheme");
        const auto slash = url_.find('/', scheme + 3);
        base_ = url_.substr(0, slash);
        path_ = slash == std::string::npos ? "/" : url_.substr(slash);
        client_ = std::make_unique<httplib::Client>(base_);
        client_->set_connection_timeout(timeout_seconds, 0);
        client_->set_read_timeout(timeout_seconds, 0);
        client_->set_write_timeout(timeout_seconds, 0);
    }

    std::string descriptor() const override { return "http:" + url_; }

protected:
    std::string roundtrip(const std::string& request) const override {
        auto res = client_->Post(path_, request, "application/json");
        if (!res) throw ModelIOError(descriptor() + ": request failed: " + httplib::to_string(res.error()));
        if (res->status != 200) throw ModelIOError(descriptor() + ": HTTP status " + std::to_string(res->status));
        return res->body;
    }

private:
    std::string url_;
    std::string base_;
    std::string path_;
    std::unique_ptr<httplib::Client> client_;
};

inline ClassifierHandle external_model(const EndpointSpec& spec) {
    if (spec.target.empty()) throw ConfigError("external model needs a command or URL");
    if (spec.transport == EndpointSpec::Transport::Subprocess) {
        return ClassifierHandle(std::make_shared<const SubprocessClassifier>(spec.target, spec.batch_size));
    }
    return ClassifierHandle(std::make_shared<const HttpClassifier>(spec.target, spec.batch_size, spec.timeout_seconds));
}

}  // namespace nicecf
