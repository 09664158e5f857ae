#pragma once

// HTTP/JSON API: authentication, sequence plotting, simulation jobs,
// phantoms and per-user storage.

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace mrseq::service {

struct ServiceConfig
{
  std::filesystem::path      data_dir = "mrseq-data";
  int                        max_jobs = 2;     // simulations running at once
  int                        max_queued = 16;  // waiting jobs before 429
  double                     token_lifetime = 24 * 3600.0;  // s
  std::optional<std::string> admin_password;   // creates user "admin" when absent
  std::filesystem::path      static_dir;       // served under / when set
  bool                       fast_password_hash = false;  // minimum Argon2 cost, for tests
  std::function<double()>    clock;            // Unix seconds; system clock when empty
};

enum class Access { open, user, admin };

struct Route
{
  std::string method, path;  // path uses {name} placeholders
  Access           access;
  std::string      summary;
  std::vector<int> statuses;  // documented response codes
};

// Every API route, in registration order.
std::vector<Route> const &routes();

// OpenAPI 3 description of routes(); docs/api.yaml is this output.
std::string openapi_yaml();

class Service
{
public:
  explicit Service(ServiceConfig cfg);
  ~Service();
  Service(Service const &) = delete;
  Service &operator=(Service const &) = delete;

  // Returns the bound port; 0 picks a free one.
  int  bind(std::string const &host, int port);
  // Blocks until stop().
  void run();
  void stop();

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

} // namespace mrseq::service
