#include "fledge/client_runtime.hpp"

#include "fledge/checkpoint.hpp"
#include "fledge/rng.hpp"

namespace fledge {

ClientRuntime::ClientRuntime(DeviceProfile profile, uint64_t experiment_seed,
                             const DataGenConfig& datagen)
    : device_(profile),
      data_(make_client_dataset(experiment_seed, profile.device_id, profile.dialect,
                                static_cast<size_t>(profile.n_train),
                                static_cast<size_t>(profile.n_val), datagen)),
      seed_(rng::derive(experiment_seed, {static_cast<uint64_t>(profile.device_id) + 101})) {}

std::optional<ContextReport> ClientRuntime::report_context(int t) {
    auto ctx = device_.sample_context(t);
    if (!ctx) return std::nullopt;
    return ContextReport{client_id(), *ctx, static_cast<long>(data_.n_train)};
}

ClientRoundExecution ClientRuntime::execute(const ModelWeights& global, int epochs,
                                            int batch_size, int t) {
    ClientRoundExecution out;
    out.epochs_assigned = epochs;

    const int batches_per_epoch = static_cast<int>(data_.n_train) / batch_size;
    const int total_batches = epochs * batches_per_epoch;

    const double battery_before = device_.battery_pct();
    TrainResult trained = train_local(global, data_, epochs, batch_size,
                                      rng::derive(seed_, {rng::kTrainShuffle, static_cast<uint64_t>(t)}));
    StepResult step = device_.step_training(total_batches);

    out.batches_completed = step.completed_batches;
    out.died = step.died;
    out.elapsed_s = step.elapsed_s;
    out.battery_after = step.battery_after;
    if (step.died) return out; // switched off: nothing reaches the server

    out.wer = evaluate(trained.weights, data_);

    ClientUpdate update;
    update.client_id = client_id();
    update.weights = flatten_weights(trained.weights);
    update.wer = out.wer;
    update.n_samples = static_cast<long>(data_.n_train);
    update.batch_time_observed_s =
        step.completed_batches > 0 ? step.elapsed_s / step.completed_batches : 0.0;
    update.battery_drop_observed_pct =
        step.completed_batches > 0 ? (battery_before - step.battery_after) / step.completed_batches
                                   : 0.0;
    out.update = std::move(update);

    if (!checkpoint_path_.empty()) {
        save_checkpoint({checkpoint_path_, trained.weights, static_cast<uint32_t>(t)});
    }
    return out;
}

} // namespace fledge
