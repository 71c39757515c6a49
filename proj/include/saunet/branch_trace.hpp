#pragma once

#include <cstdint>

namespace saunet {

/// Fingerprint of the branch decisions (ReLU signs, max selections, loss
/// clamps) taken by piecewise ops on this thread while a trace is alive.
/// Two evaluations with equal digests lie in the same smooth piece of the
/// function, which is what finite-difference checks need to know.
class BranchTrace {
 public:
  BranchTrace() noexcept;
  ~BranchTrace();
  BranchTrace(const BranchTrace&) = delete;
  BranchTrace& operator=(const BranchTrace&) = delete;

  std::uint64_t digest() const noexcept { return digest_; }

  static bool active() noexcept;
  /// No-op unless a trace is alive.
  static void record(std::uint64_t value) noexcept;

  /// Order-dependent mixing step shared by the recording ops.
  static std::uint64_t mix(std::uint64_t h, std::uint64_t v) noexcept {
    h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    return h;
  }

 private:
  std::uint64_t digest_ = 0xcbf29ce484222325ULL;
  BranchTrace* previous_;
};

}  // namespace saunet
