#pragma once

#include <string>
#include <vector>

#include "gbflow/network.hpp"
#include "gbflow/surface_tension.hpp"

namespace gbflow {

struct NetworkParams {
    SurfaceTensionModel model;
    double gamma = 1.0;
    double eta = 1.0;
    bool herring = false;       // eta -> infinity: project junctions to force balance
    double herring_tol = 1e-8;  // force-balance residual target per projection
    int herring_max_sweeps = 3; // projection cycles per step (relaxation + events)
    int order = 1;               // 1 = forward Euler, 2 = Heun
    double energy_slack = 1e-9;  // per-step/event relative energy tolerance
};

struct EventThresholds {
    double min_length = 0.0;  // boundary collapse threshold
    double min_area = 0.0;    // small-grain removal threshold
};

enum class EventKind { GrainRemoval, NeighborSwitch, JunctionSplit };

struct CriticalEvent {
    double time = 0.0;
    EventKind kind = EventKind::GrainRemoval;
    std::vector<int> ids;  // involved entity ids (grain or boundary/junction)
    // Interface energy right before the surgery and after its local
    // relaxation, for dissipation audits of the event log.
    double energy_before = 0.0;
    double energy_after = 0.0;
};

const char* event_kind_name(EventKind k);

// d alpha^(k)/dt = -gamma * sum over the grain's boundaries of
//                  |segment| * slope(alpha^(k) - alpha^(neighbor)).
// Indexed like net.grains; retired grains get 0.
std::vector<double> orientation_rates(const GrainNetwork& net,
                                      const SurfaceTensionModel& model,
                                      double gamma);

// Junction velocities eta * sum over incident boundaries of
// sigma(misorientation) * unit(segment away from the junction).
// Pinned junctions get 0. Throws if a segment is below the length floor.
std::vector<Vec2> junction_rates(const GrainNetwork& net,
                                 const SurfaceTensionModel& model, double eta);

// Total interface energy sum_b sigma(misorientation_b) * length_b.
double total_energy(const GrainNetwork& net, const SurfaceTensionModel& model);

// max_l |junction velocity| / eta ... + max_k |orientation rate|:
// zero exactly at network equilibria. Uses unit eta and gamma so the
// residual characterizes the state, not the time scales.
double equilibrium_residual(const GrainNetwork& net,
                            const SurfaceTensionModel& model);

struct StepResult {
    bool accepted = false;
    double dt_used = 0.0;
    int halvings = 0;
    int n_events = 0;
    double energy_before = 0.0;
    double energy_after = 0.0;
};

// One explicit step of the network flow followed by critical-event handling.
// The step is rejected and retried with half the step size whenever the
// energy increases beyond the relative slack; throws std::runtime_error on
// step-size underflow or unresolvable topology.
StepResult step(GrainNetwork& net, double dt, const NetworkParams& params,
                const EventThresholds& thresholds,
                std::vector<CriticalEvent>* events);

// Resolve all pending critical events (shortest boundary first):
//   - small 1-/2-sided grains and all-short triangles are removed,
//   - other short boundaries neighbor-switch through a contract/split,
//   - junctions of degree > 3 split along the lower-energy legal pairing.
// Returns the number of events appended. Post-state passes validation.
int handle_critical_events(GrainNetwork& net, const EventThresholds& thresholds,
                           const SurfaceTensionModel& model,
                           std::vector<CriticalEvent>* events);

// Gauss-Seidel relaxation toward per-junction force balance (Herring limit).
// Each visit moves one junction toward the sigma-weighted geometric median of
// its neighbors, so the energy is non-increasing. Stops at the residual
// target, at max_sweeps, or when a boundary falls below stop_length (caller
// then handles events and may resume). Returns the final residual.
double relax_junctions(GrainNetwork& net, const SurfaceTensionModel& model,
                       double tol, int max_sweeps, double stop_length);

void write_event_csv(const std::string& path,
                     const std::vector<CriticalEvent>& events);

}  // namespace gbflow
