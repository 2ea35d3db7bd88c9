#include <cstdlib>
#include <string_view>

#include "jamloc/kernels.hpp"

namespace jamloc::kernels {

const KernelTable& active() noexcept {
    static const KernelTable& chosen = [] () -> const KernelTable& {
        const char* env = std::getenv("JAMLOC_KERNEL");
        if (env != nullptr && std::string_view(env) == "scalar") return scalar();
        if (const KernelTable* v = avx2()) return *v;
        return scalar();
    }();
    return chosen;
}

}  // namespace jamloc::kernels
