#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "merchant/coins.hpp"
#include "merchant/wiener.hpp"

namespace merchant {

// Minimal register machine: up to four counters, step-deterministic.
// dec leaves a zero register at zero; jz/jnz jump on (non)zero register;
// executing halt, or the program counter leaving the listing, halts.
struct CounterMachine {
    enum class Op { kInc, kDec, kJmp, kJz, kJnz, kHalt };
    struct Instr {
        Op op;
        int reg = 0;     // inc/dec/jz/jnz
        int target = 0;  // jmp/jz/jnz, 0-based instruction index
    };
    std::vector<Instr> instrs;

    void validate() const;
};

// The programs the device is pointed at. bounded_loop(k) halts at exactly
// step k; diverge never halts; counter machines halt when they halt.
struct ToyProgram {
    enum class Kind { kBoundedLoop, kDiverge, kCounterMachine };
    Kind kind = Kind::kDiverge;
    std::int64_t k = 0;  // bounded loop
    CounterMachine machine;
    std::int64_t step_budget = 1'000'000;  // cap on direct simulation

    static ToyProgram bounded_loop(std::int64_t k, std::int64_t step_budget = 1'000'000);
    static ToyProgram diverge(std::int64_t step_budget = 1'000'000);
    static ToyProgram counter_machine(CounterMachine m, std::int64_t step_budget = 1'000'000);

    std::string describe() const;
};

// Infinite weight sequence encoding a program: stack i holds false coins
// exactly when the program halts at step i. At most one stack is false
// because the halt step is unique. Querying q(i) simulates at most i steps
// and memoizes them.
class LazyWeights {
public:
    LazyWeights(ToyProgram program, double gamma);

    double q(std::int64_t i);  // 1 or 1 + gamma
    std::optional<std::int64_t> false_index_within(std::int64_t horizon);

    std::int64_t simulated_steps() const { return steps_done_; }
    std::optional<std::int64_t> halted_at() const { return halted_at_; }
    double gamma() const { return gamma_; }
    const ToyProgram& program() const { return program_; }

    // Advance simulation to min(budget, halt); used for post-run diagnosis.
    void advance_to(std::int64_t step_limit);

private:
    void step_once();

    ToyProgram program_;
    double gamma_;
    std::int64_t steps_done_ = 0;
    std::optional<std::int64_t> halted_at_;
    // counter machine state
    std::int64_t pc_ = 0;
    std::int64_t regs_[4] = {0, 0, 0, 0};
};

LazyWeights weights_for(const ToyProgram& program, double gamma);

struct Verdict {
    enum class Kind { kClick, kNonClick };
    Kind kind = Kind::kNonClick;
    std::optional<std::int64_t> witness;      // halt step, when the device clicked
    bool witness_confirmed = false;           // fresh simulation reproduces the halt
    std::int64_t trials = 0;
    std::int64_t clicks = 0;
    std::optional<double> posterior_lower;    // non-click Bayes floor, when the bound applies
    bool horizon_blind = false;               // program halts, but past the horizon
    bool halt_known = false;                  // diagnosis found a halt step within budget
    std::optional<std::int64_t> halt_step;    // that step, when known
    std::int64_t device_sim_steps = 0;        // program steps consumed by the device itself
    std::int64_t total_sim_steps = 0;         // including post-run diagnosis
};

// Points the Brownian device at a program: W-perturbed probe trajectories of
// the given length, click condition from the program's weight sequence at
// horizon N. A click certifies halting (and names the step); silence yields
// the Bayes posterior floor for "no false coins".
Verdict run_device(const ToyProgram& program, const DeviceConfig& config, const TimeScale& scale,
                   std::int64_t horizon, double t_exponent, std::int64_t trials,
                   std::uint64_t seed, double prior_no_false = 0.5, int threads = 0);

}  // namespace merchant
