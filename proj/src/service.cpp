#include "msm/service.hpp"

#include <atomic>
#include <condition_variable>
#include <cstdlib>
#include <future>
#include <mutex>
#include <random>
#include <thread>
#include <unordered_map>

#include "msm/analysis.hpp"
#include "msm/error.hpp"

// After Eigen: the resolver header pulled in here defines a macro named _res.
#include <httplib.h>

namespace msm::service {

namespace {

using analysis::json;
using Clock = std::chrono::steady_clock;

constexpr std::size_t preview_rows = 20;

std::optional<std::string> env(const char* name) {
  const char* v = std::getenv(name);
  if (v == nullptr || *v == '\0') return std::nullopt;
  return std::string(v);
}

template <class T>
T env_number(const char* name, T fallback) {
  const auto v = env(name);
  if (!v) return fallback;
  try {
    return static_cast<T>(std::stoll(*v));
  } catch (const std::exception&) {
    return fallback;
  }
}

std::string new_session_id() {
  static std::mutex mu;
  static std::random_device rd;
  static std::mt19937_64 rng(rd());
  std::lock_guard lock(mu);
  char buf[33];
  std::snprintf(buf, sizeof buf, "%016llx%016llx", static_cast<unsigned long long>(rng()),
                static_cast<unsigned long long>(rng()));
  return buf;
}

void send_json(httplib::Response& res, int status, const std::string& body) {
  res.status = status;
  res.set_content(body, "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& code, const std::string& message,
                json detail = json::object()) {
  send_json(res, status, analysis::dump({{"error", code}, {"message", message}, {"detail", std::move(detail)}}));
}

void send_error(httplib::Response& res, const Error& e) {
  const int status = e.code() == "IncompatibleMapping" ? 409 : 422;
  send_json(res, status, analysis::dump(e.to_json()));
}

const char* status_code_name(int status) {
  switch (status) {
    case 400: return "BadRequest";
    case 404: return "NotFound";
    case 405: return "MethodNotAllowed";
    case 413: return "PayloadTooLarge";
    case 414: return "UriTooLong";
    case 503: return "Timeout";
    default: return "HttpError";
  }
}

json cell(const dataio::Column& c, std::size_t row) {
  if (c.is_missing(row)) return nullptr;
  if (c.kind == dataio::ColumnKind::numeric) return c.numeric[row];
  return c.raw[row];
}

json describe(const dataio::Dataset& data) {
  json cols = json::array();
  for (const auto& c : data.columns()) {
    json col = {{"name", c.name}, {"kind", dataio::to_string(c.kind)}};
    if (c.kind == dataio::ColumnKind::categorical) col["levels"] = c.levels;
    cols.push_back(std::move(col));
  }
  json preview = json::array();
  for (std::size_t r = 0; r < std::min(preview_rows, data.n_rows()); ++r) {
    json row = json::array();
    for (const auto& c : data.columns()) row.push_back(cell(c, r));
    preview.push_back(std::move(row));
  }
  return {{"columns", cols}, {"n_rows", data.n_rows()}, {"preview", preview}};
}

// Parses a request body as a JSON object; an empty body means {}.
json body_object(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  json j;
  try {
    j = json::parse(req.body);
  } catch (const json::parse_error& e) {
    fail_validation("InvalidJson", "request body is not valid JSON", {{"reason", e.what()}});
  }
  if (!j.is_object()) fail_validation("InvalidJson", "request body must be a JSON object");
  return j;
}

}  // namespace

Config Config::from_env() {
  Config c;
  if (auto v = env("MSM_BIND")) c.host = *v;
  c.port = env_number<int>("MSM_PORT", c.port);
  c.upload_limit = env_number<std::size_t>("MSM_UPLOAD_LIMIT", c.upload_limit);
  c.session_ttl = std::chrono::seconds(env_number<long long>("MSM_SESSION_TTL", c.session_ttl.count()));
  c.timeout = std::chrono::seconds(env_number<long long>("MSM_TIMEOUT", 120));
  if (auto v = env("MSM_CORS_ORIGIN")) c.cors_origin = *v;
  c.static_dir = env("MSM_STATIC_DIR");
  return c;
}

struct Server::Impl {
  // Datasets and bindings are immutable once built; a rebind swaps the
  // pointer, so a running analysis keeps the snapshot it started with.
  struct Session {
    std::shared_ptr<const dataio::Dataset> data;
    analysis::MappingKind kind = analysis::MappingKind::survival;
    std::shared_ptr<const analysis::Bound> bound;
    Clock::time_point last_access;
  };

  Config config;
  httplib::Server http;
  mutable std::mutex mu;
  std::unordered_map<std::string, Session> sessions;
  int port = -1;

  explicit Impl(Config c) : config(std::move(c)) { routes(); }

  void evict_expired() {
    const auto now = Clock::now();
    for (auto it = sessions.begin(); it != sessions.end();) {
      if (now - it->second.last_access > config.session_ttl) {
        it = sessions.erase(it);
      } else {
        ++it;
      }
    }
  }

  std::optional<Session> snapshot(const std::string& id) {
    std::lock_guard lock(mu);
    evict_expired();
    auto it = sessions.find(id);
    if (it == sessions.end()) return std::nullopt;
    it->second.last_access = Clock::now();
    return it->second;
  }

  // Runs fn on a worker thread; nullopt when the deadline passes first. The
  // worker owns its inputs, so an abandoned computation finishes harmlessly.
  std::optional<std::string> with_timeout(std::function<std::string()> fn) const {
    auto task = std::make_shared<std::packaged_task<std::string()>>(std::move(fn));
    auto result = task->get_future();
    std::thread([task] { (*task)(); }).detach();
    if (result.wait_for(config.timeout) != std::future_status::ready) return std::nullopt;
    return result.get();
  }

  template <class F>
  void guarded(httplib::Response& res, F&& f) {
    try {
      f();
    } catch (const Error& e) {
      send_error(res, e);
    } catch (const json::exception& e) {
      send_error(res, 422, "InvalidParameter", e.what());
    } catch (const std::bad_alloc&) {
      send_error(res, 503, "OutOfMemory", "the computation ran out of memory");
    }
  }

  void create_session(const httplib::Request& req, httplib::Response& res) {
    std::string kind_name;
    if (req.has_file("kind")) {
      kind_name = req.get_file_value("kind").content;
    } else if (req.has_param("kind")) {
      kind_name = req.get_param_value("kind");
    }
    analysis::MappingKind kind;
    try {
      kind = analysis::parse_kind(kind_name);
    } catch (const Error& e) {
      send_json(res, 400, analysis::dump(e.to_json()));
      return;
    }
    if (!req.has_file("file")) {
      send_error(res, 400, "MissingFile", "upload needs a multipart field named 'file'");
      return;
    }
    guarded(res, [&] {
      auto data = std::make_shared<const dataio::Dataset>(dataio::parse_csv(req.get_file_value("file").content));
      const auto id = new_session_id();
      json out = describe(*data);
      out["session_id"] = id;
      out["kind"] = analysis::to_string(kind);
      {
        std::lock_guard lock(mu);
        evict_expired();
        sessions[id] = Session{std::move(data), kind, nullptr, Clock::now()};
      }
      send_json(res, 200, analysis::dump(out));
    });
  }

  void bind_session(const std::string& id, const httplib::Request& req, httplib::Response& res) {
    auto s = snapshot(id);
    if (!s) return send_error(res, 404, "SessionNotFound", "no such session", {{"session_id", id}});
    guarded(res, [&] {
      auto body = body_object(req);
      auto kind = s->kind;
      if (body.contains("kind")) {
        kind = analysis::parse_kind(body["kind"].get<std::string>());
        body.erase("kind");
      }
      auto bound = std::make_shared<const analysis::Bound>(analysis::bind(*s->data, kind, body));
      json out = {{"ok", true},
                  {"kind", analysis::to_string(kind)},
                  {"mapping", bound->mapping},
                  {"validation_report", bound->report}};
      {
        std::lock_guard lock(mu);
        auto it = sessions.find(id);
        if (it == sessions.end()) return send_error(res, 404, "SessionNotFound", "no such session", {{"session_id", id}});
        // Rebinding replaces the dataset binding only if the upload is unchanged.
        if (it->second.data != s->data) {
          return send_error(res, 409, "SessionChanged", "the session changed during binding");
        }
        it->second.kind = kind;
        it->second.bound = std::move(bound);
        it->second.last_access = Clock::now();
      }
      send_json(res, 200, analysis::dump(out));
    });
  }

  void run_analysis(const std::string& id, const std::string& name, const httplib::Request& req,
                    httplib::Response& res) {
    if (!analysis::is_analysis(name)) {
      return send_error(res, 404, "UnknownAnalysis", "no analysis named '" + name + "'", {{"analysis", name}});
    }
    auto s = snapshot(id);
    if (!s) return send_error(res, 404, "SessionNotFound", "no such session", {{"session_id", id}});
    if (!s->bound) return send_error(res, 409, "NotBound", "bind a mapping before running analyses");
    guarded(res, [&] {
      auto params = body_object(req);
      auto bound = s->bound;
      const auto seed = analysis::fresh_seed();
      auto body = with_timeout([bound, name, params, seed] {
        return analysis::dump(analysis::run(name, *bound, params, seed));
      });
      if (!body) {
        return send_error(res, 503, "Timeout", "the analysis exceeded the server time limit",
                          {{"timeout_ms", config.timeout.count()}});
      }
      send_json(res, 200, *body);
    });
  }

  void routes() {
    http.set_payload_max_length(config.upload_limit);
    http.set_default_headers({{"Access-Control-Allow-Origin", config.cors_origin},
                              {"Access-Control-Allow-Methods", "GET, POST, DELETE, OPTIONS"},
                              {"Access-Control-Allow-Headers", "Content-Type"}});
    http.set_error_handler([](const httplib::Request&, httplib::Response& res) {
      if (!res.body.empty()) return httplib::Server::HandlerResponse::Unhandled;
      send_error(res, res.status, status_code_name(res.status), httplib::status_message(res.status));
      return httplib::Server::HandlerResponse::Handled;
    });
    http.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
      std::string what = "unexpected failure";
      try {
        std::rethrow_exception(ep);
      } catch (const std::exception& e) {
        what = e.what();
      } catch (...) {
      }
      send_error(res, 500, "InternalError", what);
    });
    http.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

    http.Get("/version", [](const httplib::Request&, httplib::Response& res) {
      send_json(res, 200, analysis::version());
    });
    http.Get("/analyses", [](const httplib::Request&, httplib::Response& res) {
      send_json(res, 200, analysis::dump(analysis::analysis_names()));
    });
    http.Post("/sessions", [this](const httplib::Request& req, httplib::Response& res) { create_session(req, res); });
    http.Get(R"(/sessions/([0-9a-f]+))", [this](const httplib::Request& req, httplib::Response& res) {
      const std::string id = req.matches[1];
      auto s = snapshot(id);
      if (!s) return send_error(res, 404, "SessionNotFound", "no such session", {{"session_id", id}});
      json out = describe(*s->data);
      out["session_id"] = id;
      out["kind"] = analysis::to_string(s->kind);
      out["bound"] = s->bound != nullptr;
      if (s->bound) out["mapping"] = s->bound->mapping;
      send_json(res, 200, analysis::dump(out));
    });
    http.Delete(R"(/sessions/([0-9a-f]+))", [this](const httplib::Request& req, httplib::Response& res) {
      const std::string id = req.matches[1];
      std::lock_guard lock(mu);
      if (sessions.erase(id) == 0) return send_error(res, 404, "SessionNotFound", "no such session", {{"session_id", id}});
      send_json(res, 200, analysis::dump({{"ok", true}}));
    });
    http.Post(R"(/sessions/([0-9a-f]+)/bind)", [this](const httplib::Request& req, httplib::Response& res) {
      bind_session(req.matches[1], req, res);
    });
    http.Post(R"(/sessions/([0-9a-f]+)/([a-z]+(?:/[a-z]+)?))",
              [this](const httplib::Request& req, httplib::Response& res) {
                run_analysis(req.matches[1], req.matches[2], req, res);
              });
    if (config.static_dir) http.set_mount_point("/", *config.static_dir);
  }
};

Server::Server(Config config) : impl_(std::make_unique<Impl>(std::move(config))) {}

Server::~Server() { stop(); }

int Server::bind() {
  auto& c = impl_->config;
  impl_->port = c.port == 0 ? impl_->http.bind_to_any_port(c.host) : (impl_->http.bind_to_port(c.host, c.port) ? c.port : -1);
  return impl_->port;
}

bool Server::listen() {
  if (impl_->port < 0 && bind() < 0) return false;
  return impl_->http.listen_after_bind();
}

void Server::stop() {
  if (impl_->http.is_running()) impl_->http.stop();
}

void Server::wait_until_ready() const { impl_->http.wait_until_ready(); }

std::size_t Server::session_count() const {
  std::lock_guard lock(impl_->mu);
  return impl_->sessions.size();
}

}  // namespace msm::service
