#pragma once

// SQLite metadata plus content-addressed payload files.
//
//   users(id, username UNIQUE, pwhash, role, created_at)
//   sessions(token_hash PK, user_id → users, expires_at)
//   items(id, owner → users, kind, name, created_at, blob, size)
//   jobs(id, owner → users, state, progress, phantom, submitted_at,
//        started_at, finished_at, result_item → items, error)
//
// Payloads live in <data>/blobs/<hh>/<blake2b-256 hex>. Deleting a user
// cascades to sessions, items and jobs; unreferenced blobs are removed.

#include "mrseq/error.hpp"

#include <cstdint>
#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

struct sqlite3;

namespace mrseq::service {

class Conflict : public Error
{
public:
  using Error::Error;
};

struct UserRow
{
  std::int64_t id = 0;
  std::string  username, role;
  double       created_at = 0;
};

struct ItemRow
{
  std::int64_t id = 0, owner = 0;
  std::string  kind, name;
  double       created_at = 0;
  std::string  blob;
  std::int64_t size = 0;
};

struct JobRow
{
  std::int64_t                id = 0, owner = 0;
  std::string                 state, phantom;
  double                      progress = 0;
  std::optional<double>       submitted_at, started_at, finished_at;
  std::optional<std::int64_t> result_item;
  std::string                 error;
};

std::string blake2b_hex(std::string_view bytes);

class Store
{
public:
  explicit Store(std::filesystem::path data_dir);
  ~Store();
  Store(Store const &) = delete;
  Store &operator=(Store const &) = delete;

  // Throws Conflict when the name is taken.
  std::int64_t                               create_user(std::string const &name, std::string const &pwhash, std::string const &role, double now);
  std::optional<UserRow>                     user(std::int64_t id);
  std::optional<std::pair<UserRow, std::string>> credentials(std::string const &name);
  std::vector<UserRow>                       users();
  bool update_user(std::int64_t id, std::optional<std::string> const &pwhash, std::optional<std::string> const &role);
  bool delete_user(std::int64_t id);

  void                                         add_session(std::string const &token_hash, std::int64_t user, double expires_at);
  std::optional<std::pair<UserRow, double>>    session(std::string const &token_hash);
  void                                         delete_session(std::string const &token_hash);

  std::int64_t           put_item(std::int64_t owner, std::string const &kind, std::string const &name, std::string_view bytes, double now);
  bool                   replace_item(std::int64_t id, std::string const &name, std::string_view bytes);
  std::optional<ItemRow> item(std::int64_t id);
  // All owners when `owner` is empty, newest first.
  std::vector<ItemRow>   items(std::string const &kind, std::optional<std::int64_t> owner);
  bool                   delete_item(std::int64_t id);
  std::string            read_blob(std::string const &hash);

  std::int64_t          insert_job(JobRow const &j);
  void                  update_job(JobRow const &j);
  std::optional<JobRow> job(std::int64_t id);
  // Jobs left queued or running by a previous process become failed.
  void                  fail_unfinished(double now);

private:
  std::string write_blob(std::string_view bytes);
  void        collect_blobs();

  std::filesystem::path dir_;
  sqlite3              *db_ = nullptr;
  std::recursive_mutex  mu_;
};

} // namespace mrseq::service
