#include "jobs.hpp"

#include "mrseq/pipeline.hpp"

#include <fmt/format.h>

namespace mrseq::service {

JobQueue::JobQueue(Store &store, Clock clock, int max_running, int max_queued)
  : store_(store)
  , clock_(std::move(clock))
  , max_queued_(std::size_t(std::max(0, max_queued)))
{
  for (int i = 0; i < std::max(1, max_running); ++i) {
    workers_.emplace_back([this](std::stop_token st) { work(st); });
  }
}

JobQueue::~JobQueue()
{
  {
    std::scoped_lock lock(mu_);
    for (auto &[id, job] : jobs_) { job->cancel = true; }
  }
  for (auto &w : workers_) { w.request_stop(); }
  cv_.notify_all();
  workers_.clear();
}

JobRow JobQueue::snapshot(Job const &job) const
{
  JobRow r = job.row;
  r.progress = job.progress.load();
  return r;
}

std::int64_t JobQueue::submit(JobSpec spec)
{
  auto job = std::make_shared<Job>();
  job->spec = std::move(spec);
  job->row.owner = job->spec.owner;
  job->row.phantom = job->spec.phantom_id;
  job->row.state = "queued";

  std::scoped_lock lock(mu_);
  if (queue_.size() >= max_queued_) { throw QueueFull(fmt::format("{} jobs already waiting", queue_.size())); }
  job->row.submitted_at = clock_();
  job->row.id = store_.insert_job(job->row);
  jobs_[job->row.id] = job;
  queue_.push_back(job);
  cv_.notify_one();
  return job->row.id;
}

std::optional<JobRow> JobQueue::status(std::int64_t id)
{
  {
    std::scoped_lock lock(mu_);
    if (auto it = jobs_.find(id); it != jobs_.end()) { return snapshot(*it->second); }
  }
  return store_.job(id);
}

std::optional<JobRow> JobQueue::cancel(std::int64_t id)
{
  std::scoped_lock lock(mu_);
  auto             it = jobs_.find(id);
  if (it == jobs_.end()) { return store_.job(id); }
  Job &job = *it->second;
  job.cancel = true;
  if (job.row.state == "queued") {
    std::erase(queue_, it->second);
    job.row.state = "cancelled";
    job.row.finished_at = clock_();
    store_.update_job(snapshot(job));
  }
  return snapshot(job);
}

void JobQueue::cancel_owner(std::int64_t owner)
{
  std::vector<std::int64_t> ids;
  {
    std::scoped_lock lock(mu_);
    for (auto const &[id, job] : jobs_) {
      if (job->row.owner == owner) { ids.push_back(id); }
    }
  }
  for (auto id : ids) { cancel(id); }
}

void JobQueue::work(std::stop_token const &stop)
{
  for (;;) {
    std::shared_ptr<Job> job;
    {
      std::unique_lock lock(mu_);
      if (!cv_.wait(lock, stop, [&] { return !queue_.empty(); })) { return; }
      job = queue_.front();
      queue_.pop_front();
      job->row.state = "running";
      job->row.started_at = clock_();
      store_.update_job(snapshot(*job));
    }
    run(*job);
  }
}

void JobQueue::run(Job &job)
{
  bloch::RunControl control;
  control.cancel = &job.cancel;
  control.progress = [&job](double p) {
    double cur = job.progress.load();
    while (p > cur && !job.progress.compare_exchange_weak(cur, p)) {}
  };

  std::string           state = "done", error;
  std::optional<std::int64_t> item;
  try {
    auto const r = run_pipeline(job.spec.doc, *job.spec.phantom, job.spec.config, control);
    item = store_.put_item(job.row.owner, "result", fmt::format("job {} on {}", job.row.id, job.row.phantom), r.bytes, clock_());
  } catch (Cancelled const &) {
    state = "cancelled";
  } catch (std::exception const &e) {
    state = "failed";
    error = e.what();
  }

  std::scoped_lock lock(mu_);
  if (state == "done") { job.progress = 1.0; }
  job.row.state = state;
  job.row.error = error;
  job.row.result_item = item;
  job.row.finished_at = clock_();
  job.spec = JobSpec{};
  store_.update_job(snapshot(job));
}

} // namespace mrseq::service
