#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fluxvm/bytecode/value.hpp"
#include "fluxvm/vm/runtime_image.hpp"

namespace fluxvm {

struct ExecOptions {
  std::size_t frame_limit = 100000;
  /// Operand stack capacity in slots, summed over all live frames.
  std::size_t stack_limit = std::size_t{1} << 22;
  /// Largest length NEWARR accepts.
  std::size_t array_limit = std::size_t{1} << 24;
  /// Nested host-level entries (handle trees calling back into bytecode).
  std::size_t reentry_limit = 1500;
  /// Instruction budget; 0 means unlimited.
  std::uint64_t fuel = 0;
  /// Checks the operand stack against max_stack before every instruction.
  bool check_stack_bounds = false;
};

/// Thread-local interpreter state: operand stack and call frames.
class ExecContext {
 public:
  explicit ExecContext(RuntimeImage& image, ExecOptions options = {});

  RuntimeImage& image() noexcept { return image_; }
  const RuntimeImage& image() const noexcept { return image_; }

  /// Runs `fn` to completion on this context. Re-entrant.
  Value call(const RuntimeFunction& fn, std::span<const Value> args);

  std::size_t frame_depth() const noexcept { return frames_.size(); }

 private:
  struct Frame {
    const RuntimeFunction* fn;
    std::size_t locals;  // index of local 0 in stack_
    std::size_t sp;      // saved operand stack top while a callee runs
    std::size_t pc;
  };

  Value execute(const RuntimeFunction& fn, std::span<const Value> args);
  void push_frame(const RuntimeFunction& fn, std::size_t locals_at, std::size_t nargs);
  void burn_fuel();

  RuntimeImage& image_;
  ExecOptions options_;
  std::vector<Value> stack_;
  std::vector<Frame> frames_;
  std::size_t reentry_ = 0;
  std::uint64_t fuel_left_ = 0;
};

/// Runs `entry` once on a fresh context. Arguments must match its type.
Value run(RuntimeImage& image, std::string_view entry, const std::vector<Value>& args, ExecOptions options = {});

struct ThreadOutcome {
  std::vector<Value> results;
  std::optional<std::string> error;
};

/// `threads` contexts each run `entry` `iterations` times against the shared
/// image.
std::vector<ThreadOutcome> run_concurrent(RuntimeImage& image, std::string_view entry, std::size_t threads,
                                          std::size_t iterations, const std::vector<Value>& args = {},
                                          ExecOptions options = {});

}  // namespace fluxvm
