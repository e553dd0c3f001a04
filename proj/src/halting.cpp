#include "merchant/halting.hpp"

#include <cmath>
#include <utility>

#include "merchant/errors.hpp"
#include "merchant/parallel.hpp"

namespace merchant {

void CounterMachine::validate() const {
    if (instrs.empty()) throw InvalidConfig("CounterMachine: empty program");
    const auto n = static_cast<std::int64_t>(instrs.size());
    for (const auto& ins : instrs) {
        switch (ins.op) {
            case Op::kInc:
            case Op::kDec:
                if (ins.reg < 0 || ins.reg > 3)
                    throw InvalidConfig("CounterMachine: register index must be 0..3");
                break;
            case Op::kJmp:
                if (ins.target < 0 || ins.target >= n)
                    throw InvalidConfig("CounterMachine: jump target out of range");
                break;
            case Op::kJz:
            case Op::kJnz:
                if (ins.reg < 0 || ins.reg > 3)
                    throw InvalidConfig("CounterMachine: register index must be 0..3");
                if (ins.target < 0 || ins.target >= n)
                    throw InvalidConfig("CounterMachine: jump target out of range");
                break;
            case Op::kHalt:
                break;
        }
    }
}

ToyProgram ToyProgram::bounded_loop(std::int64_t k, std::int64_t step_budget) {
    if (k < 1) throw InvalidConfig("bounded_loop: k must be >= 1");
    ToyProgram p;
    p.kind = Kind::kBoundedLoop;
    p.k = k;
    p.step_budget = step_budget;
    return p;
}

ToyProgram ToyProgram::diverge(std::int64_t step_budget) {
    ToyProgram p;
    p.kind = Kind::kDiverge;
    p.step_budget = step_budget;
    return p;
}

ToyProgram ToyProgram::counter_machine(CounterMachine m, std::int64_t step_budget) {
    m.validate();
    ToyProgram p;
    p.kind = Kind::kCounterMachine;
    p.machine = std::move(m);
    p.step_budget = step_budget;
    return p;
}

std::string ToyProgram::describe() const {
    switch (kind) {
        case Kind::kBoundedLoop:
            return "bounded-loop(" + std::to_string(k) + ")";
        case Kind::kDiverge:
            return "diverge";
        case Kind::kCounterMachine:
            return "counter-machine[" + std::to_string(machine.instrs.size()) + " instrs]";
    }
    return "?";
}

LazyWeights::LazyWeights(ToyProgram program, double gamma)
    : program_(std::move(program)), gamma_(gamma) {
    if (!(gamma > 0.0 && gamma < 1.0)) throw InvalidConfig("LazyWeights: gamma must lie in (0,1)");
    if (program_.kind == ToyProgram::Kind::kCounterMachine) program_.machine.validate();
}

void LazyWeights::step_once() {
    // one deterministic step; sets halted_at_ when this step halts
    ++steps_done_;
    switch (program_.kind) {
        case ToyProgram::Kind::kBoundedLoop:
            if (steps_done_ == program_.k) halted_at_ = steps_done_;
            return;
        case ToyProgram::Kind::kDiverge:
            return;
        case ToyProgram::Kind::kCounterMachine: {
            if (pc_ < 0 || pc_ >= static_cast<std::int64_t>(program_.machine.instrs.size())) {
                halted_at_ = steps_done_;  // ran off the listing
                return;
            }
            const auto& ins = program_.machine.instrs[static_cast<std::size_t>(pc_)];
            using Op = CounterMachine::Op;
            switch (ins.op) {
                case Op::kInc:
                    ++regs_[ins.reg];
                    ++pc_;
                    break;
                case Op::kDec:
                    if (regs_[ins.reg] > 0) --regs_[ins.reg];
                    ++pc_;
                    break;
                case Op::kJmp:
                    pc_ = ins.target;
                    break;
                case Op::kJz:
                    pc_ = regs_[ins.reg] == 0 ? ins.target : pc_ + 1;
                    break;
                case Op::kJnz:
                    pc_ = regs_[ins.reg] != 0 ? ins.target : pc_ + 1;
                    break;
                case Op::kHalt:
                    halted_at_ = steps_done_;
                    break;
            }
            return;
        }
    }
}

void LazyWeights::advance_to(std::int64_t step_limit) {
    while (!halted_at_ && steps_done_ < step_limit) step_once();
}

double LazyWeights::q(std::int64_t i) {
    if (i < 1) throw IndexError("LazyWeights::q: stack index must be >= 1");
    if (i > program_.step_budget)
        throw BudgetExceeded("LazyWeights::q: index beyond the simulation step budget");
    advance_to(i);
    return (halted_at_ && *halted_at_ == i) ? CoinSystem::base_weight + gamma_
                                            : CoinSystem::base_weight;
}

std::optional<std::int64_t> LazyWeights::false_index_within(std::int64_t horizon) {
    if (horizon > program_.step_budget)
        throw BudgetExceeded("LazyWeights: horizon beyond the simulation step budget");
    advance_to(horizon);
    if (halted_at_ && *halted_at_ <= horizon) return halted_at_;
    return std::nullopt;
}

LazyWeights weights_for(const ToyProgram& program, double gamma) {
    return LazyWeights(program, gamma);
}

Verdict run_device(const ToyProgram& program, const DeviceConfig& config, const TimeScale& scale,
                   std::int64_t horizon, double t_exponent, std::int64_t trials,
                   std::uint64_t seed, double prior_no_false, int threads) {
    config.validate();
    if (horizon < 1) throw InvalidConfig("run_device: horizon must be >= 1");
    if (trials < 1) throw InvalidConfig("run_device: trials must be >= 1");
    if (!scale.perturbed()) throw InvalidConfig("run_device: requires a perturbed scale");
    if (horizon > program.step_budget)
        throw BudgetExceeded("run_device: horizon exhausts the simulation step budget");

    Verdict v;
    v.trials = trials;

    // The device's whole view of the program: the first N stack weights.
    LazyWeights weights = weights_for(program, config.gamma);
    const std::optional<std::int64_t> false_index = weights.false_index_within(horizon);
    v.device_sim_steps = weights.simulated_steps();

    // Growth of the quadratic form over the observed prefix: exactly zero
    // when every stack weighs 1 gram, ((1+gamma)^T - 1) x_j^2 otherwise.
    const double g = growth_factor(config.gamma, t_exponent);
    struct Partial {
        std::int64_t clicks = 0;
        void merge(const Partial& o) { clicks += o.clicks; }
    };
    Partial total = run_batches<Partial>(
        trials,
        [&](std::int64_t first, std::int64_t last) {
            Partial p;
            for (std::int64_t k = first; k < last; ++k) {
                RngStream stream(seed, static_cast<std::uint64_t>(k));
                const Trajectory traj = sample_trajectory(scale, horizon, stream);
                double form_growth = 0.0;
                if (false_index) {
                    const double xj = traj.positions[static_cast<std::size_t>(*false_index)];
                    form_growth = g * xj * xj;
                }
                const double rhs = config.epsilon * weighted_sobolev_norm_sq(traj, scale).value;
                if (form_growth > rhs) ++p.clicks;
            }
            return p;
        },
        threads);
    v.clicks = total.clicks;

    if (v.clicks > 0) {
        v.kind = Verdict::Kind::kClick;
        v.witness = false_index;
        // soundness: replay the program from scratch and confirm the step
        LazyWeights fresh(program, config.gamma);
        fresh.advance_to(*false_index);
        v.witness_confirmed = fresh.halted_at() && *fresh.halted_at() == *false_index;
    } else {
        v.kind = Verdict::Kind::kNonClick;
        try {
            v.posterior_lower =
                bayes_posterior_brownian(prior_no_false, config.epsilon, config.gamma, t_exponent,
                                         scale)
                    .lower_bound;
        } catch (const BoundNotApplicable&) {
            // T too small for the bound; the verdict stands without a floor
        }
    }

    // Post-run diagnosis (not part of the device): does the program halt
    // past the horizon? Costs at most the step budget.
    weights.advance_to(program.step_budget);
    v.total_sim_steps = weights.simulated_steps();
    if (weights.halted_at()) {
        v.halt_known = true;
        v.halt_step = weights.halted_at();
        v.horizon_blind = *weights.halted_at() > horizon;
    }
    return v;
}

}  // namespace merchant
