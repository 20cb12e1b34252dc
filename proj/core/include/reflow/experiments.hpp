#pragma once

#include <map>
#include <string>

#include "reflow/run_config.hpp"

namespace reflow {

// Output filename -> file content. Drivers never touch the filesystem except to
// read fixtures named by the config; the caller writes the bundle out.
using OutputBundle = std::map<std::string, std::string>;

// Convergence order per solver on the configured field: solver,N,error,field_evals,slope.
OutputBundle run_order(const RunConfig& config);

// Invert then sample once per (solver, seed): solver,N,seed,recon_error,field_evals.
OutputBundle run_roundtrip(const RunConfig& config);

// Editing sessions per (profile, seed); emits drift.csv and summary.csv. Sessions
// fan out across workers capped by REFLOW_THREADS; output bytes are independent of
// the worker count.
OutputBundle run_multiturn(const RunConfig& config);

// Closed-form controller endpoint gaps and objective-reduction spreads:
// n_targets,seed,gap,objective_spread.
OutputBundle run_prop1(const RunConfig& config);

// Finite-weight controller error ladder: lambda,error,slope.
OutputBundle run_lqr_limit(const RunConfig& config);

// Attention mask pipeline over the configured fixture: mask.csv, mask_summary.csv,
// plus the modulated stack when requested.
OutputBundle run_mask(const RunConfig& config);

// Dispatch by subcommand name.
OutputBundle run_experiment(const std::string& name, const RunConfig& config);

// Worker cap for fan-out: REFLOW_THREADS when set to a positive integer, machine
// parallelism otherwise, never more than `jobs`.
int resolve_worker_count(int jobs);

}  // namespace reflow
