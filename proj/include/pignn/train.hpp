#ifndef PIGNN_TRAIN_HPP
#define PIGNN_TRAIN_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pignn/adam.hpp"
#include "pignn/loss.hpp"
#include "pignn/model.hpp"
#include "pignn/pde.hpp"

namespace pignn {

struct TrainConfig {
  int epochs = 2000;
  int steps = 10;          // time steps per rollout
  double dt = 1e-3;        // physical time interval
  double lr_start = 1e-3;
  double lr_floor = 1e-7;
  double gamma_start = 0.9;  // inverse problems only
  double gamma_end = 0.5;
  std::uint64_t seed = 0;
  int blocks = 1;
  bool source_feature = true;  // ablation switch for the source node feature
  int interp_neighbors = 6;
  int threads = 1;
};

/// lr = max(floor, start * 0.99^(epoch/10)): 1% decay every 10 epochs.
double lr_schedule(int epoch, const TrainConfig& cfg);

/// Linear decay from gamma_start to gamma_end over the first half of
/// training, then constant.
double gamma_schedule(int epoch, const TrainConfig& cfg);

struct EpochRecord {
  int epoch = 0;
  double loss_total = 0.0;
  double loss_pde = 0.0;
  double loss_data = 0.0;
  double lr = 0.0;
  double gamma = 0.0;
  std::vector<double> lambda;  // trainable parameter values, params order
};

/// Named f64 arrays with a version header; round-trips bit-exactly.
struct Checkpoint {
  std::uint32_t version = 1;
  std::vector<std::pair<std::string, ad::Mat>> arrays;

  void set(const std::string& name, ad::Mat value);
  const ad::Mat* find(const std::string& name) const;
  const ad::Mat& get(const std::string& name) const;
  double scalar(const std::string& name) const;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

struct TrainResult {
  ModelParams params;       // final state (resume)
  ModelParams best_params;  // least-loss epoch (exported model)
  std::vector<double> lambda_final;  // full spec parameter values
  std::vector<double> lambda_best;
  AdamState adam;
  std::vector<EpochRecord> history;
  double best_loss = 0.0;
  int best_epoch = -1;
  int next_epoch = 0;
};

/// Physics-only rollout training (gamma = 0): one optimizer update per
/// epoch on the loss accumulated over all steps, predictions detached
/// between steps.
TrainResult train_forward(const TriMesh& mesh, const PdeSpec& spec, const TrainConfig& cfg,
                          const Checkpoint* resume = nullptr);

/// Joint training of network parameters and trainable PDE parameters
/// against sparse observations (Eq-weighted physics + data loss).
TrainResult train_inverse(const TriMesh& mesh, const PdeSpec& spec,
                          const std::vector<Observation>& obs, const TrainConfig& cfg,
                          const Checkpoint* resume = nullptr);

/// Bundled inverse experiment data: `count` seeded interior nodes observed
/// at training-step times, values from the analytic solution at lam_true.
std::vector<Observation> make_observations(const TriMesh& mesh, const PdeSpec& spec, int count,
                                           std::uint64_t seed, int steps, double dt,
                                           const std::vector<double>& lam_true);

Checkpoint make_checkpoint(const TrainResult& result, const PdeSpec& spec,
                           const TrainConfig& cfg);

/// Model/config reconstruction for rollout and resume.
struct CheckpointContents {
  ModelParams params;
  ModelParams best_params;
  PdeSpec spec;  // parameter values as stored (trainables at their final value)
  TrainConfig cfg;
  AdamState adam;
  std::vector<double> lambda_best;
  double best_loss = 0.0;
  int best_epoch = -1;
  int next_epoch = 0;
};

CheckpointContents unpack_checkpoint(const Checkpoint& ckpt);

void write_history_csv(const std::string& path, const std::vector<EpochRecord>& history,
                       const std::vector<std::string>& lambda_names);

}  // namespace pignn

#endif
