#pragma once

// FIFO simulation queue. At most `max_running` jobs run at once; at most
// `max_queued` wait. States move queued → running → {done, failed,
// cancelled} or queued → cancelled, and progress never decreases.

#include "store.hpp"

#include "mrseq/bloch.hpp"
#include "mrseq/phantom.hpp"
#include "mrseq/seq.hpp"

#include <atomic>
#include <condition_variable>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <thread>

namespace mrseq::service {

class QueueFull : public Error
{
public:
  using Error::Error;
};

struct JobSpec
{
  std::int64_t                            owner = 0;
  seq::SequenceDoc                        doc;
  std::shared_ptr<phantom::Phantom const> phantom;
  std::string                             phantom_id;
  bloch::SimConfig                        config;
};

class JobQueue
{
public:
  using Clock = std::function<double()>;

  JobQueue(Store &store, Clock clock, int max_running, int max_queued);
  ~JobQueue();  // cancels everything and joins the workers

  std::int64_t          submit(JobSpec spec);
  std::optional<JobRow> status(std::int64_t id);
  // No effect on finished jobs.
  std::optional<JobRow> cancel(std::int64_t id);
  void                  cancel_owner(std::int64_t owner);

private:
  struct Job
  {
    JobRow            row;
    JobSpec           spec;
    std::atomic<bool> cancel{false};
    std::atomic<double> progress{0.0};
  };

  void   work(std::stop_token const &stop);
  void   run(Job &job);
  JobRow snapshot(Job const &job) const;

  Store                                   &store_;
  Clock                                    clock_;
  std::size_t                              max_queued_;
  std::mutex                               mu_;
  std::condition_variable_any              cv_;
  std::deque<std::shared_ptr<Job>>         queue_;
  std::map<std::int64_t, std::shared_ptr<Job>> jobs_;
  std::vector<std::jthread>                workers_;
};

} // namespace mrseq::service
