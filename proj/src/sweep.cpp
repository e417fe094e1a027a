#include "illc/sweep.hpp"

#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

#include "illc/errors.hpp"
#include "illc/io.hpp"
#include "illc/metrics.hpp"

namespace illc {

std::vector<SweepRow> run_sweep(const SweepConfig& config, const Dataset& train_data,
                                const Matrix& delta) {
  if (config.layers.empty() || config.widths.empty() || config.methods.empty() ||
      config.seeds.empty())
    throw ConfigError("sweep grid is empty");
  cluster_count(config.gamma, 1);

  struct Job {
    std::size_t layers, width;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (auto l : config.layers)
    for (auto w : config.widths)
      for (auto s : config.seeds) jobs.push_back({l, w, s});

  const std::size_t methods = config.methods.size();
  const std::size_t seeds = config.seeds.size();
  std::vector<SweepRow> rows(jobs.size() * methods);

  auto run_job = [&](std::size_t index) {
    const Job& job = jobs[index];
    TrainConfig tc = config.train;
    tc.hidden_layers = job.layers;
    tc.hidden_width = job.width;
    tc.seed = job.seed;
    const TrainResult trained = train(train_data, tc);
    const double acc = trained.log.empty() ? accuracy(trained.model, train_data)
                                           : trained.log.back().accuracy;
    // Output position: layers/width block, then method, then seed.
    const std::size_t block = index / seeds;
    const std::size_t seed_pos = index % seeds;
    for (std::size_t m = 0; m < methods; ++m) {
      CompressOptions opts;
      opts.gamma = config.gamma;
      opts.seed = job.seed;
      const ClusteredMlp c = compress(config.methods[m], trained.model, delta, opts);
      const auto io = io_unfaithfulness_global(trained.model, c.model, delta);
      const auto st = structural_unfaithfulness(trained.model, c, delta);
      SweepRow& row = rows[block * methods * seeds + m * seeds + seed_pos];
      row.layers = job.layers;
      row.width = job.width;
      row.method = config.methods[m];
      row.seed = job.seed;
      row.io = io.mean;
      row.structural = st.total;
      row.omega_log10 = cognitive_complexity(c.model).log10;
      row.train_accuracy = acc;
      row.compression_evaluations = c.layer_evaluations;
    }
  };

  const std::size_t threads = std::max<std::size_t>(1, std::min(config.threads, jobs.size()));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < jobs.size();) {
      try {
        run_job(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  return rows;
}

std::string sweep_csv_header() { return "layers,width,method,seed,io,structural,omega_log10\n"; }

std::string sweep_csv_rows(const std::vector<SweepRow>& rows) {
  std::string s;
  for (const auto& r : rows)
    s += std::to_string(r.layers) + "," + std::to_string(r.width) + "," +
         std::string(to_string(r.method)) + "," + std::to_string(r.seed) + "," +
         format_double(r.io) + "," + format_double(r.structural) + "," +
         format_double(r.omega_log10) + "\n";
  return s;
}

}  // namespace illc
