#include <atomic>
#include <cstdlib>
#include <string>

#include "accident/kernels/kernels.hpp"

namespace accident::kernels {

#if !defined(__x86_64__) && !defined(__aarch64__)
// Neither SIMD translation unit is compiled on this target.
const KernelTable* avx2_table() { return nullptr; }
const KernelTable* neon_table() { return nullptr; }
#endif

namespace {

const KernelTable* find(std::string_view name) {
  for (const KernelTable* t : available_tables()) {
    if (name == t->name) return t;
  }
  return nullptr;
}

const KernelTable* pick_default() {
  if (const char* env = std::getenv("ACCIDENT_SIMD"); env != nullptr && *env != '\0') {
    if (const KernelTable* t = find(env)) return t;
  }
  if (const KernelTable* t = avx2_table()) return t;
  if (const KernelTable* t = neon_table()) return t;
  return &scalar_table();
}

std::atomic<const KernelTable*>& current() {
  static std::atomic<const KernelTable*> table{pick_default()};
  return table;
}

}  // namespace

std::vector<const KernelTable*> available_tables() {
  std::vector<const KernelTable*> out{&scalar_table()};
  if (const KernelTable* t = avx2_table()) out.push_back(t);
  if (const KernelTable* t = neon_table()) out.push_back(t);
  return out;
}

const KernelTable& active() { return *current().load(std::memory_order_acquire); }

bool select(std::string_view name) {
  const KernelTable* t = find(name);
  if (t == nullptr) return false;
  current().store(t, std::memory_order_release);
  return true;
}

}  // namespace accident::kernels
