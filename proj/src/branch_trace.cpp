#include "saunet/branch_trace.hpp"

namespace saunet {

namespace {
thread_local BranchTrace* current = nullptr;
}

BranchTrace::BranchTrace() noexcept : previous_(current) { current = this; }

BranchTrace::~BranchTrace() { current = previous_; }

bool BranchTrace::active() noexcept { return current != nullptr; }

void BranchTrace::record(std::uint64_t value) noexcept {
  if (current) current->digest_ = mix(current->digest_, value);
}

}  // namespace saunet
