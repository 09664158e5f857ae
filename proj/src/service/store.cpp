#include "store.hpp"

#include <sodium.h>
#include <sqlite3.h>

#include <fmt/format.h>

#include <fstream>
#include <set>
#include <sstream>
#include <variant>

namespace mrseq::service {

namespace fs = std::filesystem;

namespace {

constexpr char kSchema[] = R"sql(
PRAGMA foreign_keys = ON;
CREATE TABLE IF NOT EXISTS users(
  id INTEGER PRIMARY KEY,
  username TEXT NOT NULL UNIQUE,
  pwhash TEXT NOT NULL,
  role TEXT NOT NULL CHECK (role IN ('user', 'admin')),
  created_at REAL NOT NULL);
CREATE TABLE IF NOT EXISTS sessions(
  token_hash TEXT PRIMARY KEY,
  user_id INTEGER NOT NULL REFERENCES users(id) ON DELETE CASCADE,
  expires_at REAL NOT NULL);
CREATE TABLE IF NOT EXISTS items(
  id INTEGER PRIMARY KEY,
  owner INTEGER NOT NULL REFERENCES users(id) ON DELETE CASCADE,
  kind TEXT NOT NULL CHECK (kind IN ('sequence', 'result')),
  name TEXT NOT NULL,
  created_at REAL NOT NULL,
  blob TEXT NOT NULL,
  size INTEGER NOT NULL);
CREATE TABLE IF NOT EXISTS jobs(
  id INTEGER PRIMARY KEY,
  owner INTEGER NOT NULL REFERENCES users(id) ON DELETE CASCADE,
  state TEXT NOT NULL,
  progress REAL NOT NULL,
  phantom TEXT NOT NULL,
  submitted_at REAL,
  started_at REAL,
  finished_at REAL,
  result_item INTEGER REFERENCES items(id) ON DELETE SET NULL,
  error TEXT NOT NULL DEFAULT '');
CREATE INDEX IF NOT EXISTS items_owner ON items(owner, kind);
)sql";

using Value = std::variant<std::nullptr_t, std::int64_t, double, std::string>;

class Stmt
{
public:
  Stmt(sqlite3 *db, char const *sql)
    : db_(db)
  {
    if (sqlite3_prepare_v2(db, sql, -1, &s_, nullptr) != SQLITE_OK) { fail(); }
  }
  ~Stmt() { sqlite3_finalize(s_); }
  Stmt(Stmt const &) = delete;
  Stmt &operator=(Stmt const &) = delete;

  Stmt &bind(std::initializer_list<Value> values)
  {
    int i = 1;
    for (auto const &v : values) {
      int rc = SQLITE_OK;
      if (std::holds_alternative<std::nullptr_t>(v)) {
        rc = sqlite3_bind_null(s_, i);
      } else if (auto const *n = std::get_if<std::int64_t>(&v)) {
        rc = sqlite3_bind_int64(s_, i, *n);
      } else if (auto const *d = std::get_if<double>(&v)) {
        rc = sqlite3_bind_double(s_, i, *d);
      } else {
        auto const &s = std::get<std::string>(v);
        rc = sqlite3_bind_text(s_, i, s.data(), int(s.size()), SQLITE_TRANSIENT);
      }
      if (rc != SQLITE_OK) { fail(); }
      ++i;
    }
    return *this;
  }

  // True while a row is available.
  bool step()
  {
    int const rc = sqlite3_step(s_);
    if (rc == SQLITE_ROW) { return true; }
    if (rc == SQLITE_DONE) { return false; }
    if (rc == SQLITE_CONSTRAINT) { throw Conflict(sqlite3_errmsg(db_)); }
    fail();
  }

  std::int64_t integer(int c) const { return sqlite3_column_int64(s_, c); }
  double       real(int c) const { return sqlite3_column_double(s_, c); }
  bool         null(int c) const { return sqlite3_column_type(s_, c) == SQLITE_NULL; }
  std::string  text(int c) const
  {
    auto const *p = reinterpret_cast<char const *>(sqlite3_column_text(s_, c));
    return p ? std::string(p, std::size_t(sqlite3_column_bytes(s_, c))) : std::string();
  }
  std::optional<double> opt_real(int c) const { return null(c) ? std::nullopt : std::optional(real(c)); }

private:
  [[noreturn]] void fail() const { throw Error(fmt::format("database: {}", sqlite3_errmsg(db_))); }

  sqlite3      *db_;
  sqlite3_stmt *s_ = nullptr;
};

Value opt(std::optional<double> v) { return v ? Value(*v) : Value(nullptr); }

UserRow user_row(Stmt const &s, int c = 0) { return {s.integer(c), s.text(c + 1), s.text(c + 2), s.real(c + 3)}; }

ItemRow item_row(Stmt const &s)
{
  return {s.integer(0), s.integer(1), s.text(2), s.text(3), s.real(4), s.text(5), s.integer(6)};
}

} // namespace

std::string blake2b_hex(std::string_view bytes)
{
  unsigned char out[32];
  crypto_generichash(out, sizeof out, reinterpret_cast<unsigned char const *>(bytes.data()), bytes.size(), nullptr, 0);
  std::string hex(64, '0');
  sodium_bin2hex(hex.data(), hex.size() + 1, out, sizeof out);
  return hex;
}

Store::Store(fs::path data_dir)
  : dir_(std::move(data_dir))
{
  fs::create_directories(dir_ / "blobs");
  if (sqlite3_open_v2((dir_ / "mrseq.db").c_str(), &db_, SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE | SQLITE_OPEN_FULLMUTEX,
                      nullptr) != SQLITE_OK) {
    std::string const msg = db_ ? sqlite3_errmsg(db_) : "out of memory";
    sqlite3_close(db_);
    throw Error("cannot open database: " + msg);
  }
  sqlite3_busy_timeout(db_, 5000);
  char *err = nullptr;
  if (sqlite3_exec(db_, kSchema, nullptr, nullptr, &err) != SQLITE_OK) {
    std::string const msg = err ? err : "unknown";
    sqlite3_free(err);
    sqlite3_close(db_);
    throw Error("cannot create schema: " + msg);
  }
}

Store::~Store() { sqlite3_close(db_); }

std::int64_t Store::create_user(std::string const &name, std::string const &pwhash, std::string const &role, double now)
{
  std::scoped_lock lock(mu_);
  if (credentials(name)) { throw Conflict(fmt::format("user '{}' exists", name)); }
  Stmt s(db_, "INSERT INTO users(username, pwhash, role, created_at) VALUES (?, ?, ?, ?)");
  s.bind({name, pwhash, role, now}).step();
  return sqlite3_last_insert_rowid(db_);
}

std::optional<UserRow> Store::user(std::int64_t id)
{
  std::scoped_lock lock(mu_);
  Stmt s(db_, "SELECT id, username, role, created_at FROM users WHERE id = ?");
  s.bind({id});
  if (!s.step()) { return std::nullopt; }
  return user_row(s);
}

std::optional<std::pair<UserRow, std::string>> Store::credentials(std::string const &name)
{
  std::scoped_lock lock(mu_);
  Stmt s(db_, "SELECT id, username, role, created_at, pwhash FROM users WHERE username = ?");
  s.bind({name});
  if (!s.step()) { return std::nullopt; }
  return std::pair{user_row(s), s.text(4)};
}

std::vector<UserRow> Store::users()
{
  std::scoped_lock     lock(mu_);
  Stmt                 s(db_, "SELECT id, username, role, created_at FROM users ORDER BY id");
  std::vector<UserRow> out;
  while (s.step()) { out.push_back(user_row(s)); }
  return out;
}

bool Store::update_user(std::int64_t id, std::optional<std::string> const &pwhash, std::optional<std::string> const &role)
{
  std::scoped_lock lock(mu_);
  if (!user(id)) { return false; }
  if (pwhash) {
    Stmt(db_, "UPDATE users SET pwhash = ? WHERE id = ?").bind({*pwhash, id}).step();
    Stmt(db_, "DELETE FROM sessions WHERE user_id = ?").bind({id}).step();
  }
  if (role) { Stmt(db_, "UPDATE users SET role = ? WHERE id = ?").bind({*role, id}).step(); }
  return true;
}

bool Store::delete_user(std::int64_t id)
{
  std::scoped_lock lock(mu_);
  Stmt             s(db_, "DELETE FROM users WHERE id = ?");
  s.bind({id}).step();
  bool const gone = sqlite3_changes(db_) > 0;
  if (gone) { collect_blobs(); }
  return gone;
}

void Store::add_session(std::string const &token_hash, std::int64_t user, double expires_at)
{
  std::scoped_lock lock(mu_);
  Stmt(db_, "INSERT INTO sessions(token_hash, user_id, expires_at) VALUES (?, ?, ?)").bind({token_hash, user, expires_at}).step();
}

std::optional<std::pair<UserRow, double>> Store::session(std::string const &token_hash)
{
  std::scoped_lock lock(mu_);
  Stmt             s(db_, "SELECT u.id, u.username, u.role, u.created_at, s.expires_at FROM sessions s "
                          "JOIN users u ON u.id = s.user_id WHERE s.token_hash = ?");
  s.bind({token_hash});
  if (!s.step()) { return std::nullopt; }
  return std::pair{user_row(s), s.real(4)};
}

void Store::delete_session(std::string const &token_hash)
{
  std::scoped_lock lock(mu_);
  Stmt(db_, "DELETE FROM sessions WHERE token_hash = ?").bind({token_hash}).step();
}

std::string Store::write_blob(std::string_view bytes)
{
  std::string const hash = blake2b_hex(bytes);
  fs::path const    dir = dir_ / "blobs" / hash.substr(0, 2);
  fs::path const    path = dir / hash;
  if (fs::exists(path)) { return hash; }
  fs::create_directories(dir);
  fs::path const tmp = dir / (hash + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out.write(bytes.data(), std::streamsize(bytes.size()))) { throw Error("cannot write blob " + hash); }
  }
  fs::rename(tmp, path);
  return hash;
}

std::string Store::read_blob(std::string const &hash)
{
  std::ifstream in(dir_ / "blobs" / hash.substr(0, 2) / hash, std::ios::binary);
  if (!in) { throw Error("missing blob " + hash); }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void Store::collect_blobs()
{
  std::set<std::string> live;
  Stmt                  s(db_, "SELECT DISTINCT blob FROM items");
  while (s.step()) { live.insert(s.text(0)); }
  std::error_code ec;
  for (auto const &e : fs::recursive_directory_iterator(dir_ / "blobs", ec)) {
    if (e.is_regular_file() && !live.count(e.path().filename().string())) { fs::remove(e.path(), ec); }
  }
}

std::int64_t Store::put_item(std::int64_t owner, std::string const &kind, std::string const &name, std::string_view bytes,
                             double now)
{
  std::scoped_lock  lock(mu_);
  std::string const hash = write_blob(bytes);
  Stmt(db_, "INSERT INTO items(owner, kind, name, created_at, blob, size) VALUES (?, ?, ?, ?, ?, ?)")
    .bind({owner, kind, name, now, hash, std::int64_t(bytes.size())})
    .step();
  return sqlite3_last_insert_rowid(db_);
}

bool Store::replace_item(std::int64_t id, std::string const &name, std::string_view bytes)
{
  std::scoped_lock  lock(mu_);
  std::string const hash = write_blob(bytes);
  Stmt(db_, "UPDATE items SET name = ?, blob = ?, size = ? WHERE id = ?").bind({name, hash, std::int64_t(bytes.size()), id}).step();
  bool const found = sqlite3_changes(db_) > 0;
  collect_blobs();
  return found;
}

std::optional<ItemRow> Store::item(std::int64_t id)
{
  std::scoped_lock lock(mu_);
  Stmt             s(db_, "SELECT id, owner, kind, name, created_at, blob, size FROM items WHERE id = ?");
  s.bind({id});
  if (!s.step()) { return std::nullopt; }
  return item_row(s);
}

std::vector<ItemRow> Store::items(std::string const &kind, std::optional<std::int64_t> owner)
{
  std::scoped_lock lock(mu_);
  Stmt             s(db_, owner ? "SELECT id, owner, kind, name, created_at, blob, size FROM items WHERE kind = ? AND owner = ? "
                                  "ORDER BY id DESC"
                                : "SELECT id, owner, kind, name, created_at, blob, size FROM items WHERE kind = ? ORDER BY id DESC");
  if (owner) {
    s.bind({kind, *owner});
  } else {
    s.bind({kind});
  }
  std::vector<ItemRow> out;
  while (s.step()) { out.push_back(item_row(s)); }
  return out;
}

bool Store::delete_item(std::int64_t id)
{
  std::scoped_lock lock(mu_);
  Stmt(db_, "DELETE FROM items WHERE id = ?").bind({id}).step();
  bool const gone = sqlite3_changes(db_) > 0;
  if (gone) { collect_blobs(); }
  return gone;
}

std::int64_t Store::insert_job(JobRow const &j)
{
  std::scoped_lock lock(mu_);
  Stmt(db_, "INSERT INTO jobs(owner, state, progress, phantom, submitted_at) VALUES (?, ?, ?, ?, ?)")
    .bind({j.owner, j.state, j.progress, j.phantom, opt(j.submitted_at)})
    .step();
  return sqlite3_last_insert_rowid(db_);
}

void Store::update_job(JobRow const &j)
{
  std::scoped_lock lock(mu_);
  Stmt(db_, "UPDATE jobs SET state = ?, progress = ?, started_at = ?, finished_at = ?, result_item = ?, error = ? WHERE id = ?")
    .bind({j.state, j.progress, opt(j.started_at), opt(j.finished_at), j.result_item ? Value(*j.result_item) : Value(nullptr),
           j.error, j.id})
    .step();
}

std::optional<JobRow> Store::job(std::int64_t id)
{
  std::scoped_lock lock(mu_);
  Stmt             s(db_, "SELECT id, owner, state, progress, phantom, submitted_at, started_at, finished_at, result_item, error "
                          "FROM jobs WHERE id = ?");
  s.bind({id});
  if (!s.step()) { return std::nullopt; }
  JobRow j;
  j.id = s.integer(0);
  j.owner = s.integer(1);
  j.state = s.text(2);
  j.progress = s.real(3);
  j.phantom = s.text(4);
  j.submitted_at = s.opt_real(5);
  j.started_at = s.opt_real(6);
  j.finished_at = s.opt_real(7);
  if (!s.null(8)) { j.result_item = s.integer(8); }
  j.error = s.text(9);
  return j;
}

void Store::fail_unfinished(double now)
{
  std::scoped_lock lock(mu_);
  Stmt(db_, "UPDATE jobs SET state = 'failed', finished_at = ?, error = 'server restarted' WHERE state IN ('queued', 'running')")
    .bind({now})
    .step();
}

} // namespace mrseq::service
