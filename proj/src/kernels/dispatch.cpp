#include <cstdlib>
#include <cstring>

#include "brokerage/kernels.hpp"

namespace brokerage::kernels {

std::string_view isa_name(Isa isa) { return isa == Isa::Avx2 ? "avx2" : "scalar"; }

Isa detected_isa() {
    static const Isa isa = avx2::available() ? Isa::Avx2 : Isa::Scalar;
    return isa;
}

Isa active_isa() {
    static const Isa isa = [] {
        const char* forced = std::getenv("BROKERAGE_SIMD");
        if (forced != nullptr && std::strcmp(forced, "scalar") == 0) return Isa::Scalar;
        return detected_isa();
    }();
    return isa;
}

Moments gft_moments(double price, std::span<const double> v, std::span<const double> w) {
    return active_isa() == Isa::Avx2 ? avx2::gft_moments(price, v, w) : scalar::gft_moments(price, v, w);
}

Moments absdiff_moments(std::span<const double> v, std::span<const double> w) {
    return active_isa() == Isa::Avx2 ? avx2::absdiff_moments(v, w) : scalar::absdiff_moments(v, w);
}

void inverse_cdf(const PiecewiseView& dist, std::span<const double> u, std::span<double> out) {
    if (active_isa() == Isa::Avx2) {
        avx2::inverse_cdf(dist, u, out);
    } else {
        scalar::inverse_cdf(dist, u, out);
    }
}

}  // namespace brokerage::kernels
