#include "jobs.hpp"
#include "store.hpp"

#include "mrseq/pipeline.hpp"
#include "mrseq/service.hpp"
#include "mrseq/wire.hpp"

#include <fmt/format.h>
#include <httplib.h>
#include <sodium.h>

#include <charconv>
#include <chrono>
#include <regex>

namespace mrseq::service {

namespace {

using wire::Json;
namespace fs = std::filesystem;

constexpr char kResultType[] = "application/vnd.mrseq.result";

struct HttpError
{
  int         status;
  std::string code, message;
  Json        violations = nullptr;
};

HttpError unprocessable(std::vector<seq::Violation> const &v, std::string const &prefix = {})
{
  Json j = wire::to_json(v);
  for (auto &x : j) { x["path"] = prefix + x["path"].get<std::string>(); }
  return {422, "INVALID_SEQUENCE", v.empty() ? "invalid sequence" : v[0].message, std::move(j)};
}

HttpError schema(std::string const &path, std::string const &what)
{
  return {422, "SCHEMA_ERROR", what, Json::array({Json{{"path", path}, {"kind", "schema"}, {"message", what}}})};
}

HttpError not_found(std::string const &what) { return {404, "NOT_FOUND", what + " not found"}; }

void send(httplib::Response &res, int status, Json const &body)
{
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response &res, HttpError const &e)
{
  Json j{{"code", e.code}, {"message", e.message}};
  if (!e.violations.is_null()) { j["violations"] = e.violations; }
  send(res, e.status, j);
}

nlohmann::json parse_body(httplib::Request const &req)
{
  try {
    return nlohmann::json::parse(req.body);
  } catch (nlohmann::json::parse_error const &e) {
    throw schema("", fmt::format("request body is not JSON: {}", e.what()));
  }
}

std::string text_field(nlohmann::json const &j, char const *key, bool required = true)
{
  if (!j.is_object()) { throw schema("", "expected a JSON object"); }
  if (!j.contains(key)) {
    if (!required) { return {}; }
    throw schema(std::string(".") + key, "missing required field");
  }
  if (!j[key].is_string()) { throw schema(std::string(".") + key, "expected a string"); }
  return j[key].get<std::string>();
}

// Load a document, reporting schema paths under `prefix`.
seq::SequenceDoc parse_doc(nlohmann::json const &j, std::string const &prefix)
{
  if (j.is_null()) { throw schema(prefix, "missing required field"); }
  try {
    return seq::load_sequence(j.dump());
  } catch (SchemaError const &e) {
    throw schema(prefix + e.path(), e.detail());
  }
}

std::int64_t id_param(httplib::Request const &req, std::string const &what)
{
  std::string const &s = req.path_params.at("id");
  std::int64_t       id = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), id);
  if (ec != std::errc() || p != s.data() + s.size()) { throw not_found(what); }
  return id;
}

Json user_json(UserRow const &u) { return {{"id", u.id}, {"username", u.username}, {"role", u.role}, {"created_at", u.created_at}}; }

Json item_json(ItemRow const &i)
{
  return {{"id", i.id}, {"owner", i.owner}, {"name", i.name}, {"created_at", i.created_at}, {"size", i.size}, {"blake2b", i.blob}};
}

Json job_json(JobRow const &j)
{
  Json out{{"id", j.id},
           {"owner", j.owner},
           {"state", j.state},
           {"progress", j.progress},
           {"phantom_id", j.phantom},
           {"submitted_at", j.submitted_at ? Json(*j.submitted_at) : Json()},
           {"started_at", j.started_at ? Json(*j.started_at) : Json()},
           {"finished_at", j.finished_at ? Json(*j.finished_at) : Json()},
           {"result_id", j.result_item ? Json(*j.result_item) : Json()}};
  if (!j.error.empty()) { out["error"] = j.error; }
  return out;
}

std::vector<Route> const kRoutes = {
  {"POST", "/api/auth/login", Access::open, "Exchange credentials for a bearer token", {200, 401, 422}},
  {"POST", "/api/auth/logout", Access::user, "Revoke the presented token", {204, 401}},
  {"GET", "/api/auth/me", Access::user, "Current user", {200, 401}},
  {"POST", "/api/plot/sequence", Access::user, "Flatten a sequence and return diagram series", {200, 401, 422}},
  {"POST", "/api/slice_preview", Access::user, "Slice plane excited by a sequence", {200, 401, 422}},
  {"POST", "/api/simulate", Access::user, "Queue a simulation", {202, 401, 404, 422, 429}},
  {"GET", "/api/simulate/{id}/status", Access::user, "Job state and progress", {200, 401, 404}},
  {"GET", "/api/simulate/{id}/result", Access::user, "Result file of a finished job", {200, 401, 404, 409}},
  {"POST", "/api/simulate/{id}/cancel", Access::user, "Cancel a job", {200, 401, 404}},
  {"GET", "/api/phantoms", Access::user, "List phantoms", {200, 401}},
  {"GET", "/api/phantoms/{id}/slice", Access::user, "Orthogonal slice of a phantom map", {200, 400, 401, 404, 409}},
  {"GET", "/api/sequences", Access::user, "List stored sequences", {200, 401}},
  {"POST", "/api/sequences", Access::user, "Store a sequence", {201, 401, 422}},
  {"GET", "/api/sequences/{id}", Access::user, "Read a stored sequence", {200, 401, 404}},
  {"PUT", "/api/sequences/{id}", Access::user, "Replace a stored sequence", {200, 401, 404, 422}},
  {"DELETE", "/api/sequences/{id}", Access::user, "Delete a stored sequence", {204, 401, 404}},
  {"GET", "/api/results", Access::user, "List stored results", {200, 401}},
  {"POST", "/api/results", Access::user, "Store a result file", {201, 401, 422}},
  {"GET", "/api/results/{id}", Access::user, "Download a stored result file", {200, 401, 404}},
  {"DELETE", "/api/results/{id}", Access::user, "Delete a stored result", {204, 401, 404}},
  {"GET", "/api/users", Access::admin, "List users", {200, 401, 403}},
  {"POST", "/api/users", Access::admin, "Create a user", {201, 401, 403, 409, 422}},
  {"GET", "/api/users/{id}", Access::admin, "Read a user", {200, 401, 403, 404}},
  {"PUT", "/api/users/{id}", Access::admin, "Change password or role", {200, 401, 403, 404, 422}},
  {"DELETE", "/api/users/{id}", Access::admin, "Delete a user and everything they own", {204, 401, 403, 404, 409}},
};

struct Caller
{
  UserRow     user;
  std::string token_hash;

  bool admin() const { return user.role == "admin"; }
};

bool valid_role(std::string const &r) { return r == "user" || r == "admin"; }

} // namespace

std::vector<Route> const &routes() { return kRoutes; }

struct Service::Impl
{
  using Handler = std::function<void(httplib::Request const &, httplib::Response &, Caller const &)>;

  ServiceConfig    cfg;
  Store            store;
  JobQueue         queue;
  httplib::Server  http;
  std::mutex       phantoms_mu;
  std::map<std::string, std::shared_ptr<phantom::Phantom const>> phantoms;

  explicit Impl(ServiceConfig c)
    : cfg(std::move(c))
    , store(cfg.data_dir)
    , queue(store, [this] { return now(); }, cfg.max_jobs, cfg.max_queued)
  {
    if (sodium_init() < 0) { throw Error("libsodium initialisation failed"); }
    store.fail_unfinished(now());
    if (cfg.admin_password && !store.credentials("admin")) {
      store.create_user("admin", hash_password(*cfg.admin_password), "admin", now());
    }
    http.set_payload_max_length(std::size_t(256) << 20);
    if (!cfg.static_dir.empty()) { http.set_mount_point("/", cfg.static_dir.string()); }
    http.set_exception_handler([](httplib::Request const &, httplib::Response &res, std::exception_ptr ep) {
      std::string what = "unknown error";
      try {
        std::rethrow_exception(ep);
      } catch (std::exception const &e) {
        what = e.what();
      } catch (...) {
      }
      send_error(res, {500, "INTERNAL", what});
    });
    http.set_error_handler([](httplib::Request const &, httplib::Response &res) {
      if (res.body.empty() && res.status == 404) { send_error(res, {404, "NOT_FOUND", "no such route"}); }
    });
    install();
  }

  double now() const
  {
    if (cfg.clock) { return cfg.clock(); }
    return std::chrono::duration<double>(std::chrono::system_clock::now().time_since_epoch()).count();
  }

  std::string hash_password(std::string const &pw) const
  {
    char out[crypto_pwhash_STRBYTES];
    auto ops = cfg.fast_password_hash ? crypto_pwhash_OPSLIMIT_MIN : crypto_pwhash_OPSLIMIT_INTERACTIVE;
    auto mem = cfg.fast_password_hash ? crypto_pwhash_MEMLIMIT_MIN : crypto_pwhash_MEMLIMIT_INTERACTIVE;
    if (crypto_pwhash_str(out, pw.data(), pw.size(), ops, mem) != 0) { throw Error("password hashing ran out of memory"); }
    return out;
  }

  Caller authenticate(httplib::Request const &req)
  {
    std::string const h = req.get_header_value("Authorization");
    if (h.rfind("Bearer ", 0) != 0 || h.size() == 7) { throw HttpError{401, "TOKEN_MISSING", "bearer token required"}; }
    std::string const hash = blake2b_hex(h.substr(7));
    auto              s = store.session(hash);
    if (!s) { throw HttpError{401, "TOKEN_INVALID", "unknown or revoked token"}; }
    if (s->second <= now()) {
      store.delete_session(hash);
      throw HttpError{401, "TOKEN_EXPIRED", "token expired"};
    }
    return {s->first, hash};
  }

  void route(std::string const &method, std::string const &path, Handler h)
  {
    auto const it = std::find_if(kRoutes.begin(), kRoutes.end(), [&](Route const &r) { return r.method == method && r.path == path; });
    if (it == kRoutes.end()) { throw std::logic_error("route missing from table: " + method + " " + path); }
    Access const access = it->access;
    std::string const pattern = std::regex_replace(path, std::regex(R"(\{(\w+)\})"), ":$1");
    httplib::Server::Handler wrapped = [this, access, h = std::move(h)](httplib::Request const &req, httplib::Response &res) {
      try {
        Caller c;
        if (access != Access::open) {
          c = authenticate(req);
          if (access == Access::admin && !c.admin()) { throw HttpError{403, "FORBIDDEN", "admin role required"}; }
        }
        h(req, res, c);
      } catch (HttpError const &e) {
        send_error(res, e);
      }
    };
    if (method == "GET") {
      http.Get(pattern, wrapped);
    } else if (method == "POST") {
      http.Post(pattern, wrapped);
    } else if (method == "PUT") {
      http.Put(pattern, wrapped);
    } else {
      http.Delete(pattern, wrapped);
    }
  }

  std::shared_ptr<phantom::Phantom const> find_phantom(std::string const &id)
  {
    std::scoped_lock lock(phantoms_mu);
    if (auto it = phantoms.find(id); it != phantoms.end()) { return it->second; }
    std::shared_ptr<phantom::Phantom const> p;
    auto const                              names = phantom::builtin_names();
    if (std::find(names.begin(), names.end(), id) != names.end()) {
      p = std::make_shared<phantom::Phantom const>(phantom::builtin(id));
    } else if (std::regex_match(id, std::regex(R"([A-Za-z0-9_.-]+)")) && id.front() != '.') {
      fs::path const file = cfg.data_dir / "phantoms" / (id + ".mrph");
      if (!fs::exists(file)) { return nullptr; }
      p = std::make_shared<phantom::Phantom const>(wire::resolve_phantom(file.string()));
    } else {
      return nullptr;
    }
    phantoms.emplace(id, p);
    return p;
  }

  std::vector<std::string> phantom_ids()
  {
    auto            ids = phantom::builtin_names();
    std::error_code ec;
    for (auto const &e : fs::directory_iterator(cfg.data_dir / "phantoms", ec)) {
      if (e.path().extension() == ".mrph") { ids.push_back(e.path().stem().string()); }
    }
    return ids;
  }

  std::optional<ItemRow> visible_item(std::int64_t id, std::string const &kind, Caller const &c, bool write)
  {
    auto it = store.item(id);
    if (!it || it->kind != kind) { return std::nullopt; }
    if (it->owner != c.user.id && (write || !c.admin())) { return std::nullopt; }
    return it;
  }

  JobRow visible_job(httplib::Request const &req, Caller const &c)
  {
    auto j = queue.status(id_param(req, "job"));
    if (!j || (j->owner != c.user.id && !c.admin())) { throw not_found("job"); }
    return *j;
  }

  void install();
  void install_items();
  void install_users();
};

void Service::Impl::install()
{
  route("POST", "/api/auth/login", [this](auto const &req, auto &res, Caller const &) {
    auto const        body = parse_body(req);
    std::string const name = text_field(body, "username");
    std::string const pw = text_field(body, "password");
    auto const        cred = store.credentials(name);
    if (!cred || crypto_pwhash_str_verify(cred->second.c_str(), pw.data(), pw.size()) != 0) {
      throw HttpError{401, "INVALID_CREDENTIALS", "wrong username or password"};
    }
    unsigned char raw[32];
    randombytes_buf(raw, sizeof raw);
    std::string token(64, '0');
    sodium_bin2hex(token.data(), token.size() + 1, raw, sizeof raw);
    double const expires = now() + cfg.token_lifetime;
    store.add_session(blake2b_hex(token), cred->first.id, expires);
    send(res, 200, {{"token", token}, {"expires_at", expires}, {"user", user_json(cred->first)}});
  });

  route("POST", "/api/auth/logout", [this](auto const &, auto &res, Caller const &c) {
    store.delete_session(c.token_hash);
    res.status = 204;
  });

  route("GET", "/api/auth/me", [](auto const &, auto &res, Caller const &c) { send(res, 200, user_json(c.user)); });

  route("POST", "/api/plot/sequence", [](auto const &req, auto &res, Caller const &) {
    double dt = 1e-5;
    if (req.has_param("dt")) {
      try {
        dt = std::stod(req.get_param_value("dt"));
      } catch (std::exception const &) {
        dt = 0.0;
      }
      if (!(dt > 0.0)) { throw schema("?dt", "dt must be a positive number"); }
    }
    auto const         doc = parse_doc(parse_body(req), "");
    seq::EventTimeline tl;
    try {
      tl = seq::flatten(doc);
    } catch (Error const &e) {
      auto v = seq::validate(doc);
      if (v.empty()) { v.push_back({e.path(), "expression", std::nullopt, e.what()}); }
      throw unprocessable(v);
    }
    send(res, 200, wire::to_json(seq::diagram_series(tl, dt)));
  });

  route("POST", "/api/slice_preview", [](auto const &req, auto &res, Caller const &) {
    auto const doc = parse_doc(parse_body(req), "");
    if (auto v = seq::validate(doc); !v.empty()) {
      // Limit violations do not change the geometry; unresolvable documents do.
      bool const fatal = std::any_of(v.begin(), v.end(), [](auto const &x) {
        return x.kind == "expression" || x.kind == "unknown_group" || x.kind == "cyclic_group" || x.kind == "invalid_value";
      });
      if (fatal) { throw unprocessable(v); }
    }
    send(res, 200, wire::to_json(phantom::slice_from_sequence(seq::flatten(doc))));
  });

  route("POST", "/api/simulate", [this](auto const &req, auto &res, Caller const &c) {
    auto const body = parse_body(req);
    if (!body.is_object()) { throw schema("", "expected a JSON object"); }
    std::string const pid = text_field(body, "phantom_id");
    JobSpec           spec;
    spec.owner = c.user.id;
    spec.phantom_id = pid;
    spec.doc = parse_doc(body.contains("sequence") ? body["sequence"] : nlohmann::json(), ".sequence");
    try {
      spec.config = wire::sim_config(body.contains("config") ? body["config"] : nlohmann::json(), ".config");
    } catch (SchemaError const &e) {
      throw schema(e.path(), e.detail());
    }
    if (auto v = seq::validate(spec.doc); !v.empty()) { throw unprocessable(v, ".sequence"); }
    spec.phantom = find_phantom(pid);
    if (!spec.phantom) { throw not_found("phantom '" + pid + "'"); }
    try {
      std::int64_t const id = queue.submit(std::move(spec));
      send(res, 202, {{"job_id", id}});
    } catch (QueueFull const &e) {
      throw HttpError{429, "QUEUE_FULL", e.what()};
    }
  });

  route("GET", "/api/simulate/{id}/status", [this](auto const &req, auto &res, Caller const &c) {
    send(res, 200, job_json(visible_job(req, c)));
  });

  route("GET", "/api/simulate/{id}/result", [this](auto const &req, auto &res, Caller const &c) {
    JobRow const j = visible_job(req, c);
    if (j.state != "done") { throw HttpError{409, "RESULT_NOT_READY", fmt::format("job is {}", j.state)}; }
    auto const item = j.result_item ? store.item(*j.result_item) : std::nullopt;
    if (!item) { throw HttpError{404, "NOT_FOUND", "result was deleted"}; }
    res.set_content(store.read_blob(item->blob), kResultType);
  });

  route("POST", "/api/simulate/{id}/cancel", [this](auto const &req, auto &res, Caller const &c) {
    JobRow const j = visible_job(req, c);
    send(res, 200, job_json(*queue.cancel(j.id)));
  });

  route("GET", "/api/phantoms", [this](auto const &, auto &res, Caller const &) {
    Json out = Json::array();
    for (auto const &id : phantom_ids()) {
      auto const p = find_phantom(id);
      if (!p) { continue; }
      Json j{{"id", id}, {"name", p->name}, {"n_spins", p->spins.size()}, {"moving", !p->motion.empty()}};
      j["grid"] = p->grid ? Json{{"dims", p->grid->dims}, {"spacing", p->grid->spacing}, {"origin", p->grid->origin}} : Json();
      out.push_back(std::move(j));
    }
    send(res, 200, out);
  });

  route("GET", "/api/phantoms/{id}/slice", [this](auto const &req, auto &res, Caller const &) {
    auto const p = find_phantom(req.path_params.at("id"));
    if (!p) { throw not_found("phantom"); }
    auto const plane = phantom::parse_plane(req.get_param_value("plane"));
    if (!plane) { throw HttpError{400, "BAD_PLANE", "plane must be axial, coronal or sagittal"}; }
    std::string const qs = req.has_param("quantity") ? req.get_param_value("quantity") : "pd";
    phantom::Quantity q = phantom::Quantity::pd;
    if (qs == "t1") {
      q = phantom::Quantity::t1;
    } else if (qs == "t2") {
      q = phantom::Quantity::t2;
    } else if (qs != "pd") {
      throw HttpError{400, "BAD_QUANTITY", "quantity must be pd, t1 or t2"};
    }
    if (!p->grid) { throw HttpError{409, "NO_GRID", "phantom has no voxel grid"}; }
    int const axis = *plane == phantom::Plane::axial ? 2 : *plane == phantom::Plane::coronal ? 1 : 0;
    int       index = p->grid->dims[std::size_t(axis)] / 2;
    if (req.has_param("index")) {
      std::string const s = req.get_param_value("index");
      auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), index);
      if (ec != std::errc() || ptr != s.data() + s.size()) { throw HttpError{400, "BAD_INDEX", "index must be an integer"}; }
    }
    try {
      send(res, 200, wire::to_json(phantom::orthogonal_slices(*p, *plane, index, q)));
    } catch (phantom::RangeError const &e) {
      throw HttpError{400, "BAD_INDEX", e.what()};
    }
  });

  install_items();
  install_users();
}

void Service::Impl::install_items()
{
  route("GET", "/api/sequences", [this](auto const &, auto &res, Caller const &c) {
    Json out = Json::array();
    for (auto const &i : store.items("sequence", c.admin() ? std::nullopt : std::optional(c.user.id))) { out.push_back(item_json(i)); }
    send(res, 200, out);
  });

  auto sequence_body = [](httplib::Request const &req) {
    auto const        body = parse_body(req);
    std::string const name = text_field(body, "name");
    if (name.empty()) { throw schema(".name", "must not be empty"); }
    auto const doc = parse_doc(body.contains("sequence") ? body["sequence"] : nlohmann::json(), ".sequence");
    return std::pair{name, seq::save_sequence(doc)};
  };

  route("POST", "/api/sequences", [this, sequence_body](auto const &req, auto &res, Caller const &c) {
    auto const [name, bytes] = sequence_body(req);
    send(res, 201, item_json(*store.item(store.put_item(c.user.id, "sequence", name, bytes, now()))));
  });

  route("GET", "/api/sequences/{id}", [this](auto const &req, auto &res, Caller const &c) {
    auto const it = visible_item(id_param(req, "sequence"), "sequence", c, false);
    if (!it) { throw not_found("sequence"); }
    Json j = item_json(*it);
    j["sequence"] = Json::parse(store.read_blob(it->blob));
    send(res, 200, j);
  });

  route("PUT", "/api/sequences/{id}", [this, sequence_body](auto const &req, auto &res, Caller const &c) {
    auto const it = visible_item(id_param(req, "sequence"), "sequence", c, true);
    if (!it) { throw not_found("sequence"); }
    auto const [name, bytes] = sequence_body(req);
    store.replace_item(it->id, name, bytes);
    send(res, 200, item_json(*store.item(it->id)));
  });

  route("DELETE", "/api/sequences/{id}", [this](auto const &req, auto &res, Caller const &c) {
    auto const it = visible_item(id_param(req, "sequence"), "sequence", c, true);
    if (!it) { throw not_found("sequence"); }
    store.delete_item(it->id);
    res.status = 204;
  });

  route("GET", "/api/results", [this](auto const &, auto &res, Caller const &c) {
    Json out = Json::array();
    for (auto const &i : store.items("result", c.admin() ? std::nullopt : std::optional(c.user.id))) { out.push_back(item_json(i)); }
    send(res, 200, out);
  });

  route("POST", "/api/results", [this](auto const &req, auto &res, Caller const &c) {
    std::string const name = req.has_param("name") ? req.get_param_value("name") : "uploaded result";
    try {
      recon::load_result(req.body);
    } catch (Error const &e) {
      throw schema("", fmt::format("not a result file: {}", e.what()));
    }
    send(res, 201, item_json(*store.item(store.put_item(c.user.id, "result", name, req.body, now()))));
  });

  route("GET", "/api/results/{id}", [this](auto const &req, auto &res, Caller const &c) {
    auto const it = visible_item(id_param(req, "result"), "result", c, false);
    if (!it) { throw not_found("result"); }
    res.set_content(store.read_blob(it->blob), kResultType);
  });

  route("DELETE", "/api/results/{id}", [this](auto const &req, auto &res, Caller const &c) {
    auto const it = visible_item(id_param(req, "result"), "result", c, true);
    if (!it) { throw not_found("result"); }
    store.delete_item(it->id);
    res.status = 204;
  });
}

void Service::Impl::install_users()
{
  route("GET", "/api/users", [this](auto const &, auto &res, Caller const &) {
    Json out = Json::array();
    for (auto const &u : store.users()) { out.push_back(user_json(u)); }
    send(res, 200, out);
  });

  route("POST", "/api/users", [this](auto const &req, auto &res, Caller const &) {
    auto const        body = parse_body(req);
    std::string const name = text_field(body, "username");
    std::string const pw = text_field(body, "password");
    std::string       role = text_field(body, "role", false);
    if (role.empty()) { role = "user"; }
    if (!std::regex_match(name, std::regex(R"([A-Za-z0-9_.-]{1,64})"))) {
      throw schema(".username", "1 to 64 characters from A-Z a-z 0-9 _ . -");
    }
    if (pw.size() < 8) { throw schema(".password", "at least 8 characters"); }
    if (!valid_role(role)) { throw schema(".role", "must be user or admin"); }
    try {
      auto const id = store.create_user(name, hash_password(pw), role, now());
      send(res, 201, user_json(*store.user(id)));
    } catch (Conflict const &) {
      throw HttpError{409, "USERNAME_TAKEN", fmt::format("user '{}' exists", name)};
    }
  });

  route("GET", "/api/users/{id}", [this](auto const &req, auto &res, Caller const &) {
    auto const u = store.user(id_param(req, "user"));
    if (!u) { throw not_found("user"); }
    send(res, 200, user_json(*u));
  });

  route("PUT", "/api/users/{id}", [this](auto const &req, auto &res, Caller const &) {
    std::int64_t const id = id_param(req, "user");
    auto const         body = parse_body(req);
    std::string const  pw = text_field(body, "password", false);
    std::string const  role = text_field(body, "role", false);
    if (body.contains("password") && pw.size() < 8) { throw schema(".password", "at least 8 characters"); }
    if (body.contains("role") && !valid_role(role)) { throw schema(".role", "must be user or admin"); }
    std::optional<std::string> hash;
    if (body.contains("password")) { hash = hash_password(pw); }
    if (!store.update_user(id, hash, body.contains("role") ? std::optional(role) : std::nullopt)) { throw not_found("user"); }
    send(res, 200, user_json(*store.user(id)));
  });

  route("DELETE", "/api/users/{id}", [this](auto const &req, auto &res, Caller const &c) {
    std::int64_t const id = id_param(req, "user");
    if (id == c.user.id) { throw HttpError{409, "SELF_DELETE", "cannot delete the calling user"}; }
    queue.cancel_owner(id);
    if (!store.delete_user(id)) { throw not_found("user"); }
    res.status = 204;
  });
}

Service::Service(ServiceConfig cfg)
  : impl_(std::make_unique<Impl>(std::move(cfg)))
{
}

Service::~Service() { stop(); }

int Service::bind(std::string const &host, int port)
{
  int const got = port == 0 ? impl_->http.bind_to_any_port(host) : (impl_->http.bind_to_port(host, port) ? port : -1);
  if (got < 0) { throw Error(fmt::format("cannot listen on {}:{}", host, port)); }
  return got;
}

void Service::run() { impl_->http.listen_after_bind(); }

void Service::stop() { impl_->http.stop(); }

} // namespace mrseq::service
