// mrseq-server: the HTTP API.

#include "mrseq/service.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <csignal>
#include <cstdlib>
#include <thread>

int main(int argc, char **argv)
{
  CLI::App                        app{"MRI sequence simulation server"};
  mrseq::service::ServiceConfig   cfg;
  std::string                     host = "127.0.0.1", data_dir = cfg.data_dir.string(), static_dir;
  int                             port = 8080;
  app.add_option("--host", host, "Listen address");
  app.add_option("--port", port, "Listen port")->check(CLI::Range(0, 65535));
  app.add_option("--data-dir", data_dir, "Database and payload directory");
  app.add_option("--max-jobs", cfg.max_jobs, "Simulations running at once")->check(CLI::PositiveNumber);
  app.add_option("--max-queued", cfg.max_queued, "Waiting jobs before requests are refused")->check(CLI::NonNegativeNumber);
  app.add_option("--static-dir", static_dir, "Front-end files served under /");
  bool openapi = false;
  app.add_flag("--openapi", openapi, "Print the OpenAPI description and exit");
  CLI11_PARSE(app, argc, argv);
  if (openapi) {
    fmt::print("{}", mrseq::service::openapi_yaml());
    return 0;
  }

  cfg.data_dir = data_dir;
  cfg.static_dir = static_dir;
  if (char const *pw = std::getenv("MRSEQ_ADMIN_PASSWORD"); pw && *pw) { cfg.admin_password = pw; }

  // Handle SIGINT/SIGTERM on a dedicated thread; every other thread inherits the mask.
  sigset_t sigs;
  sigemptyset(&sigs);
  sigaddset(&sigs, SIGINT);
  sigaddset(&sigs, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &sigs, nullptr);

  try {
    mrseq::service::Service svc(cfg);
    int const               bound = svc.bind(host, port);
    std::jthread            waiter([&] {
      int sig = 0;
      sigwait(&sigs, &sig);
      svc.stop();
    });
    fmt::print("listening on http://{}:{}\n", host, bound);
    std::fflush(stdout);
    svc.run();
    if (waiter.joinable()) { pthread_kill(waiter.native_handle(), SIGTERM); }
  } catch (std::exception const &e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  }
  return 0;
}
