#include "gaussdrift/environment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace gaussdrift {

namespace {

constexpr double kInfinity = std::numeric_limits<double>::infinity();

Eigen::Vector3d positions_of(const PhaseVector& x, const Block& b) {
    return {x[b.offset], x[b.offset + 2], x[b.offset + 4]};
}

Eigen::Vector3d momenta_of(const PhaseVector& x, const Block& b) {
    return {x[b.offset + 1], x[b.offset + 3], x[b.offset + 5]};
}

std::vector<int> complement_indices(int dim, const Block& b) {
    std::vector<int> keep;
    keep.reserve(dim - b.len);
    for (int i = 0; i < dim; ++i)
        if (i < b.offset || i >= b.offset + b.len) keep.push_back(i);
    return keep;
}

Eigen::Vector3d sphere_direction(std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    Eigen::Vector3d v;
    do {
        v = {n(rng), n(rng), n(rng)};
    } while (v.squaredNorm() < 1e-12);
    return v.normalized();
}

}  // namespace

std::int64_t dof_count(std::int64_t k_active) {
    const std::int64_t d = 6 * (k_active + 1);
    return d * (d + 1) + 2 * d + 2;
}

double mean_speed(const BathParams& params) {
    return std::sqrt(8.0 * params.temperature / (std::numbers::pi * params.mass));
}

double injection_rate(const BathParams& params) {
    const double r = params.vicinity_radius;
    return params.density * 4.0 * std::numbers::pi * r * r * mean_speed(params) / 4.0;
}

std::vector<BathSample> sample_bath(const BathParams& params,
                                    std::mt19937_64& rng, double box_half_width) {
    const double volume = 8.0 * box_half_width * box_half_width * box_half_width;
    const auto count = static_cast<std::int64_t>(std::llround(params.density * volume));

    std::uniform_real_distribution<double> pos(-box_half_width, box_half_width);
    std::normal_distribution<double> mom(0.0, 1.0);
    const double p_sigma = std::sqrt(params.mass * params.temperature);
    const Covariance block = min_uncertainty_block(3, params.env_width);

    std::vector<BathSample> out;
    out.reserve(count);
    for (std::int64_t i = 0; i < count; ++i) {
        BathSample s;
        s.x.resize(6);
        for (int a = 0; a < 3; ++a) {
            s.x[2 * a] = pos(rng);
            s.x[2 * a + 1] = p_sigma * mom(rng);
        }
        s.sigma = block;
        out.push_back(std::move(s));
    }
    return out;
}

BathSample sample_flux_arrival(const BathParams& params, std::mt19937_64& rng,
                               const Eigen::Vector3d& center) {
    const Eigen::Vector3d n = sphere_direction(rng);

    // Tangent basis.
    Eigen::Vector3d t1 = n.cross(std::abs(n.x()) < 0.9 ? Eigen::Vector3d::UnitX()
                                                       : Eigen::Vector3d::UnitY());
    t1.normalize();
    const Eigen::Vector3d t2 = n.cross(t1);

    const double v_sigma = std::sqrt(params.temperature / params.mass);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);

    // Flux-weighted normal speed (Rayleigh) plus thermal tangential components.
    const double u = std::max(uni(rng), std::numeric_limits<double>::min());
    const double v_n = v_sigma * std::sqrt(-2.0 * std::log(u));
    const Eigen::Vector3d velocity =
        -v_n * n + v_sigma * gauss(rng) * t1 + v_sigma * gauss(rng) * t2;

    const Eigen::Vector3d position = center + params.vicinity_radius * n;
    const Eigen::Vector3d momentum = params.mass * velocity;

    BathSample s;
    s.x.resize(6);
    for (int a = 0; a < 3; ++a) {
        s.x[2 * a] = position[a];
        s.x[2 * a + 1] = momentum[a];
    }
    s.sigma = min_uncertainty_block(3, params.env_width);
    return s;
}

bool should_drop(const GaussianOperator& g, int particle_id,
                 const BathParams& params) {
    const Block pb = particle_block(g.registry, particle_id);
    const Block sb = particle_block(g.registry, g.registry.front().id);
    const double r2 = params.vicinity_radius * params.vicinity_radius;

    for (const PhaseVector* x : {&g.x_alpha, &g.x_beta}) {
        const Eigen::Vector3d rel = positions_of(*x, pb) - positions_of(*x, sb);
        if (rel.squaredNorm() <= r2) return false;
        const Eigen::Vector3d v_rel =
            momenta_of(*x, pb) / params.mass - momenta_of(*x, sb);  // system mass 1
        if (rel.dot(v_rel) <= 0.0) return false;
    }
    return true;
}

GaussianOperator drop_particle(const GaussianOperator& g, int particle_id) {
    if (!g.registry.empty() && particle_id == g.registry.front().id)
        throw data_error("dropping the system particle is forbidden");
    const Block b = particle_block(g.registry, particle_id);
    const int dim = g.dim();
    const std::vector<int> keep = complement_indices(dim, b);
    const int rdim = static_cast<int>(keep.size());

    GaussianOperator out;
    out.phase = g.phase;
    out.log_scale = g.log_scale;
    out.weight = g.weight;

    // Centroid correction: i [Sigma S P (x_alpha - x_beta)] restricted to the
    // retained rows, with P projecting onto the dropped coordinates. The
    // correction is a dynamical quantity from here on (see the propagator's
    // offset block); an exactly zero correction is stored as an empty vector.
    const Eigen::VectorXd u = apply_symplectic(Eigen::VectorXd(g.x_alpha - g.x_beta));
    Eigen::VectorXcd offset = Eigen::VectorXcd::Zero(rdim);
    bool offset_nonzero = false;
    for (int i = 0; i < rdim; ++i) {
        Complex acc(0.0, 0.0);
        for (int j = b.offset; j < b.offset + b.len; ++j)
            acc += g.sigma(keep[i], j) * u[j];
        offset[i] = Complex(0.0, 1.0) * acc;
        if (g.ledger.centroid_offset.size() != 0)
            offset[i] += g.ledger.centroid_offset[keep[i]];
        if (offset[i] != Complex(0.0, 0.0)) offset_nonzero = true;
    }

    out.x_alpha.resize(rdim);
    out.x_beta.resize(rdim);
    out.sigma.resize(rdim, rdim);
    for (int i = 0; i < rdim; ++i) {
        out.x_alpha[i] = g.x_alpha[keep[i]];
        out.x_beta[i] = g.x_beta[keep[i]];
        for (int j = 0; j < rdim; ++j) out.sigma(i, j) = g.sigma(keep[i], keep[j]);
    }

    // Contributions of the dropped coordinates to eta, frozen at drop time.
    const Complex eta_full = eta_factor(g.x_alpha, g.x_beta, g.sigma);
    const Complex eta_kept = eta_factor(out.x_alpha, out.x_beta, out.sigma);
    const Complex delta_eta = eta_full - eta_kept;

    if (offset_nonzero)
        out.ledger.centroid_offset = offset;
    out.ledger.eta_offset = g.ledger.eta_offset + delta_eta;
    out.ledger.norm_log = g.ledger.norm_log + delta_eta.real();

    out.registry.reserve(g.registry.size() - 1);
    for (const auto& p : g.registry)
        if (p.id != particle_id) out.registry.push_back(p);

    // Branch tracking re-anchors after a restructuring event.
    out.det_arg = std::arg(
        Eigen::PartialPivLU<Eigen::MatrixXcd>(out.sigma).determinant());
    return out;
}

GaussianOperator inject_particle(const GaussianOperator& g, const BathSample& s,
                                 int particle_id) {
    if (registry_contains(g.registry, particle_id))
        throw data_error("inject_particle: id already active");
    const int dim = g.dim();
    const int bl = static_cast<int>(s.x.size());

    GaussianOperator out;
    out.phase = g.phase;
    out.log_scale = g.log_scale;
    out.weight = g.weight;
    out.registry = g.registry;
    out.registry.push_back({particle_id, bl / 2});

    out.x_alpha.resize(dim + bl);
    out.x_alpha << g.x_alpha, s.x;
    out.x_beta.resize(dim + bl);
    out.x_beta << g.x_beta, s.x;

    out.sigma = Covariance::Zero(dim + bl, dim + bl);
    out.sigma.topLeftCorner(dim, dim) = g.sigma;
    out.sigma.bottomRightCorner(bl, bl) = s.sigma;

    if (g.ledger.centroid_offset.size() != 0) {
        out.ledger = g.ledger;
        out.ledger.centroid_offset = Eigen::VectorXcd::Zero(dim + bl);
        out.ledger.centroid_offset.head(dim) = g.ledger.centroid_offset;
    } else {
        out.ledger = g.ledger;
    }

    // det(Sigma') = det(Sigma) * det(block); the block determinant is real
    // and positive, so the unwrapped argument carries over.
    out.det_arg = g.det_arg;
    return out;
}

GaussianOperator reduce_to_system(const GaussianOperator& g) {
    GaussianOperator out = g;
    while (out.registry.size() > 1)
        out = drop_particle(out, out.registry.back().id);
    return out;
}

MaybeInjectResult maybe_inject(const GaussianOperator& g, double dt,
                               const BathParams& params, std::mt19937_64& rng) {
    MaybeInjectResult result;
    result.op = g;

    const double rate = injection_rate(params);
    if (rate <= 0.0) {
        result.next_event_dt = kInfinity;
        return result;
    }

    std::exponential_distribution<double> exp_dist(rate);
    const Block sb = particle_block(g.registry, g.registry.front().id);
    int next_id = 0;
    for (const auto& p : g.registry) next_id = std::max(next_id, p.id + 1);

    double t = exp_dist(rng);
    while (t < dt) {
        if (static_cast<int>(result.op.registry.size()) - 1 < params.max_active) {
            const Eigen::Vector3d center =
                0.5 * (positions_of(result.op.x_alpha, sb) +
                       positions_of(result.op.x_beta, sb));
            result.op = inject_particle(
                result.op, sample_flux_arrival(params, rng, center), next_id++);
            ++result.n_injected;
        }
        t += exp_dist(rng);
    }
    result.next_event_dt = t - dt;
    return result;
}

namespace {

// Ballistic roster: entry times of free-flight particles into the vicinity
// sphere centered at the origin.
struct RosterEntry {
    double t_entry;
    Eigen::Vector3d r0;
    Eigen::Vector3d v;
};

std::vector<RosterEntry> build_roster(const BathParams& params,
                                      std::mt19937_64& rng, double t_end) {
    // Exactly roster_size particles in the box whose volume matches the
    // configured density.
    const double volume = params.roster_size / std::max(params.density, 1e-300);
    const double half = 0.5 * std::cbrt(volume);
    std::vector<RosterEntry> roster;
    std::uniform_real_distribution<double> pos(-half, half);
    std::normal_distribution<double> mom(0.0, 1.0);
    const double v_sigma = std::sqrt(params.temperature / params.mass);
    const double r2 = params.vicinity_radius * params.vicinity_radius;

    for (int i = 0; i < params.roster_size; ++i) {
        Eigen::Vector3d r0{pos(rng), pos(rng), pos(rng)};
        Eigen::Vector3d v{v_sigma * mom(rng), v_sigma * mom(rng), v_sigma * mom(rng)};
        double entry = kInfinity;
        if (r0.squaredNorm() < r2) {
            entry = 0.0;
        } else {
            // |r0 + v t|^2 = R^2
            const double a = v.squaredNorm();
            const double b = 2.0 * r0.dot(v);
            const double c = r0.squaredNorm() - r2;
            const double disc = b * b - 4.0 * a * c;
            if (a > 0.0 && disc > 0.0) {
                const double t1 = (-b - std::sqrt(disc)) / (2.0 * a);
                if (t1 > 0.0) entry = t1;
            }
        }
        if (entry <= t_end) roster.push_back({entry, r0, v});
    }
    std::sort(roster.begin(), roster.end(),
              [](const RosterEntry& a, const RosterEntry& b) {
                  return a.t_entry < b.t_entry;
              });
    return roster;
}

}  // namespace

TrajectoryResult run_trajectory(const GaussianOperator& initial,
                                const TrajectorySettings& settings,
                                std::mt19937_64& rng) {
    TrajectoryResult result;
    const BathParams& bath = settings.bath;

    GaussianOperator g = initial;
    int next_id = 1;
    for (const auto& p : g.registry) next_id = std::max(next_id, p.id + 1);

    const double rate = injection_rate(bath);
    std::exponential_distribution<double> exp_dist(rate > 0.0 ? rate : 1.0);

    std::vector<RosterEntry> roster;
    std::size_t roster_idx = 0;
    if (bath.mode == BathParams::Mode::kRoster && bath.density > 0.0)
        roster = build_roster(bath, rng, settings.t_end);

    double t = 0.0;
    double next_arrival = kInfinity;
    if (bath.mode == BathParams::Mode::kFlux && rate > 0.0)
        next_arrival = exp_dist(rng);
    else if (!roster.empty())
        next_arrival = roster.front().t_entry;

    bool arrival_pending = false;
    RosterEntry pending_entry{};  // roster mode only

    std::size_t sample_idx = 0;

    try {
        DynamicalState state = pack_state(g, t);

        auto active_count = [&]() {
            return static_cast<int>(g.registry.size()) - 1;
        };

        auto do_inject = [&](double now) {
            BathSample s;
            if (bath.mode == BathParams::Mode::kFlux) {
                const Block sb = particle_block(g.registry, g.registry.front().id);
                const Eigen::Vector3d center =
                    0.5 * (positions_of(g.x_alpha, sb) + positions_of(g.x_beta, sb));
                s = sample_flux_arrival(bath, rng, center);
            } else {
                const Eigen::Vector3d r = pending_entry.r0 + now * pending_entry.v;
                if (r.squaredNorm() >= bath.vicinity_radius * bath.vicinity_radius)
                    return false;  // passed through while deferred
                s.x.resize(6);
                for (int a = 0; a < 3; ++a) {
                    s.x[2 * a] = r[a];
                    s.x[2 * a + 1] = bath.mass * pending_entry.v[a];
                }
                s.sigma = min_uncertainty_block(3, bath.env_width);
            }
            g = inject_particle(g, s, next_id++);
            ++result.n_injected;
            return true;
        };

        auto advance_arrival = [&]() {
            if (bath.mode == BathParams::Mode::kFlux) {
                next_arrival = rate > 0.0 ? t + exp_dist(rng) : kInfinity;
            } else {
                ++roster_idx;
                next_arrival = roster_idx < roster.size()
                                   ? roster[roster_idx].t_entry
                                   : kInfinity;
            }
        };

        // Drop poll over the flattened state, evaluated at step boundaries.
        auto drop_check = [&](const DynamicalState& st) {
            const int d = st.dim;
            const double r2 = bath.vicinity_radius * bath.vicinity_radius;
            int offset = 2 * g.registry.front().n_coords;
            for (std::size_t pi = 1; pi < g.registry.size(); ++pi) {
                const int len = 2 * g.registry[pi].n_coords;
                bool drop = true;
                for (int branch = 0; branch < 2 && drop; ++branch) {
                    const auto x = st.y.segment(branch * d, d);
                    Eigen::Vector3d rel, vrel;
                    for (int a = 0; a < 3; ++a) {
                        rel[a] = x[offset + 2 * a] - x[2 * a];
                        vrel[a] = x[offset + 2 * a + 1] / bath.mass - x[2 * a + 1];
                    }
                    drop = rel.squaredNorm() > r2 && rel.dot(vrel) > 0.0;
                }
                if (drop) return StepAction::kStop;
                offset += len;
            }
            return StepAction::kContinue;
        };

        while (true) {
            const double t_sample = sample_idx < settings.sample_times.size()
                                        ? settings.sample_times[sample_idx]
                                        : kInfinity;
            const double t_next = std::min({t_sample, next_arrival, settings.t_end});

            ExperimentHamiltonian model(settings.model, active_count());
            const bool has_bath = active_count() > 0;
            auto r = integrate(model, state, t_next, settings.ode,
                               has_bath ? StepCallback(drop_check) : nullptr);
            result.n_steps += r.n_accepted;
            t = state.time;
            unpack_state(state, g);

            if (!r.reached_target) {
                // Stopped at a step boundary to drop departing particles.
                std::vector<int> to_drop;
                for (std::size_t pi = 1; pi < g.registry.size(); ++pi)
                    if (should_drop(g, g.registry[pi].id, bath))
                        to_drop.push_back(g.registry[pi].id);
                for (int id : to_drop) {
                    g = drop_particle(g, id);
                    ++result.n_dropped;
                }
                if (arrival_pending && active_count() < bath.max_active) {
                    do_inject(t);  // roster particles may have passed through
                    arrival_pending = false;
                }
                state = pack_state(g, t);
                continue;
            }

            if (t == next_arrival) {
                if (bath.mode == BathParams::Mode::kRoster)
                    pending_entry = roster[roster_idx];
                if (active_count() < bath.max_active) {
                    do_inject(t);
                } else {
                    arrival_pending = true;
                }
                advance_arrival();
                state = pack_state(g, t);
                continue;
            }

            if (t == t_sample) {
                result.snapshots.push_back(reduce_to_system(g));
                ++sample_idx;
                if (sample_idx >= settings.sample_times.size() &&
                    t >= settings.t_end)
                    break;
                continue;
            }

            if (t >= settings.t_end) break;
        }
    } catch (const Error& e) {
        result.failed = true;
        result.error = e.category() + std::string(": ") + e.what();
    } catch (const std::exception& e) {
        result.failed = true;
        result.error = std::string("internal: ") + e.what();
    }
    return result;
}

}  // namespace gaussdrift
