#include "diffpath/kernels.hpp"

#include <atomic>
#include <cstring>

namespace diffpath::kernels {

namespace {

const Ops* pick_best() {
    if (const Ops* ops = avx2_ops()) return ops;
    if (const Ops* ops = neon_ops()) return ops;
    return &scalar_ops();
}

std::atomic<const Ops*> g_active{nullptr};

} // namespace

const Ops& active() {
    const Ops* ops = g_active.load(std::memory_order_acquire);
    if (!ops) {
        ops = pick_best();
        g_active.store(ops, std::memory_order_release);
    }
    return *ops;
}

void set_active(const Ops& ops) { g_active.store(&ops, std::memory_order_release); }

bool select_by_name(const char* name) {
    for (const Ops* ops : available()) {
        if (std::strcmp(ops->name, name) == 0) {
            set_active(*ops);
            return true;
        }
    }
    return false;
}

std::vector<const Ops*> available() {
    std::vector<const Ops*> out{&scalar_ops()};
    if (const Ops* ops = avx2_ops()) out.push_back(ops);
    if (const Ops* ops = neon_ops()) out.push_back(ops);
    return out;
}

} // namespace diffpath::kernels
