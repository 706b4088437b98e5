#ifndef HAHNFORGE_BUDGET_HPP
#define HAHNFORGE_BUDGET_HPP

#include <cstdint>
#include <stdexcept>
#include <string>

namespace hahnforge {

/// Base class for every failure surfaced by the engine.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Precondition / domain violations (group mismatch, non-unit inversion,
/// divisibility failure, malformed input, ...).
class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what) : Error(what) {}
};

/// Raised when an observation exceeds its step budget. Distinct from a stream
/// genuinely ending: an exhausted stream returns fewer terms without error.
class BudgetExhaustedError : public Error {
 public:
  explicit BudgetExhaustedError(const std::string& what) : Error(what) {}
};

/// Step allowance for one observation. Each internal term-expansion step
/// (stream pull, queue pop, lattice visit) consumes one unit.
class Budget {
 public:
  explicit Budget(std::int64_t limit) : remaining_(limit), limit_(limit) {}

  /// Observation-scoped budget using the process default (see set_default).
  static Budget with_default();

  void step(const char* where = "") {
    if (remaining_ <= 0)
      throw BudgetExhaustedError(std::string("budget exhausted after ") +
                                 std::to_string(limit_) + " steps" +
                                 (*where ? std::string(" in ") + where : ""));
    --remaining_;
  }

  std::int64_t used() const { return limit_ - remaining_; }
  std::int64_t remaining() const { return remaining_; }
  std::int64_t limit() const { return limit_; }

  /// Default per-observation step limit. Initialized from HAHNFORGE_BUDGET
  /// when set, else 100000; the CLI --budget flag overrides it.
  static std::int64_t default_limit();
  static void set_default_limit(std::int64_t limit);

 private:
  std::int64_t remaining_;
  std::int64_t limit_;
};

}  // namespace hahnforge

#endif
