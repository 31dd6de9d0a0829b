#pragma once

// Cooling-tower (direct) water usage effectiveness and the psychrometric
// helpers feeding it. Everything here is a pure function of its arguments.

#include <array>
#include <cmath>
#include <string>
#include <string_view>

#include "wue/error.hpp"

namespace wue {

class TemperatureF {
public:
    explicit TemperatureF(double value) : value_(value) {
        if (!std::isfinite(value)) throw DomainError("temperature", "temperature must be finite");
    }
    double value() const noexcept { return value_; }

private:
    double value_;
};

class RelativeHumidity {
public:
    explicit RelativeHumidity(double percent) : percent_(percent) {
        if (!(percent >= 0.0 && percent <= 100.0))
            throw DomainError("relative_humidity", "relative humidity must lie in [0, 100] percent");
    }
    double percent() const noexcept { return percent_; }

private:
    double percent_;
};

// Liters of water per kilowatt-hour of energy (heat rejected or electricity generated).
class WueValue {
public:
    explicit WueValue(double liters_per_kwh) : value_(liters_per_kwh) {
        if (!(liters_per_kwh >= 0.0) || !std::isfinite(liters_per_kwh))
            throw DomainError("wue", "WUE must be a finite non-negative value");
    }
    double value() const noexcept { return value_; }

private:
    double value_;
};

enum class CoolingStrategy {
    FixedApproach,   // cold water held 5 F above wet bulb
    FixedColdWater,  // cold water held at 85 F
};

inline std::string_view to_string(CoolingStrategy s) {
    return s == CoolingStrategy::FixedApproach ? "fixed-approach" : "fixed-cold-water";
}

struct QuadraticFit {
    double a2;
    double a1;
    double a0;
    double lower_limit_f;  // set points are incompatible below this wet bulb

    constexpr double operator()(double t) const { return a2 * t * t + a1 * t + a0; }
};

inline constexpr QuadraticFit kFixedApproachFit{-0.0001896, 0.03095, 0.4442, 30.0};
inline constexpr QuadraticFit kFixedColdWaterFit{0.0005112, -0.04982, 2.387, 45.0};

inline constexpr const QuadraticFit& fit_for(CoolingStrategy s) {
    return s == CoolingStrategy::FixedApproach ? kFixedApproachFit : kFixedColdWaterFit;
}

// Direct WUE model: one of the two operating strategies scaled by an
// installation-specific efficiency multiplier (lambda = 1 is the generic tower).
class DirectWueModel {
public:
    explicit DirectWueModel(CoolingStrategy strategy, double lambda = 1.0) : strategy_(strategy), lambda_(lambda) {
        if (!(lambda > 0.0) || !std::isfinite(lambda))
            throw DomainError("lambda", "efficiency multiplier must be finite and > 0");
    }

    CoolingStrategy strategy() const noexcept { return strategy_; }
    double lambda() const noexcept { return lambda_; }
    double lower_limit_f() const noexcept { return fit_for(strategy_).lower_limit_f; }
    bool in_domain(TemperatureF t_w) const noexcept { return t_w.value() >= lower_limit_f(); }

private:
    CoolingStrategy strategy_;
    double lambda_;
};

// L/kWh of heat rejected. Throws DomainError below the strategy's wet-bulb
// lower limit; callers decide whether that becomes a gap.
inline WueValue direct_wue(const DirectWueModel& model, TemperatureF t_w) {
    const auto& fit = fit_for(model.strategy());
    if (!model.in_domain(t_w))
        throw DomainError("wet_bulb", "wet bulb " + std::to_string(t_w.value()) + " F is below the " +
                                          std::string(to_string(model.strategy())) + " model lower limit of " +
                                          std::to_string(fit.lower_limit_f) + " F");
    return WueValue(model.lambda() * fit(t_w.value()));
}

inline TemperatureF celsius_to_fahrenheit(double celsius) { return TemperatureF(32.0 + 1.8 * celsius); }

inline double fahrenheit_to_celsius(TemperatureF t) { return (t.value() - 32.0) / 1.8; }

// --- Stull (2011) single-expression wet bulb -------------------------------

inline constexpr double kStullMinTempC = -20.0;
inline constexpr double kStullMaxTempC = 50.0;
inline constexpr double kStullMinRh = 5.0;
inline constexpr double kStullMaxRh = 99.0;

namespace detail {

// Minimum RH (%) at T = -20, -19, ..., 5 C. Below this line the fit stops
// being monotone in humidity and can exceed the dry bulb; every entry is the
// worst case over a +/-1 C neighbourhood so linear interpolation stays safe.
inline constexpr std::array<double, 26> kStullColdDryRh{70, 68, 66, 64, 62, 60, 58, 56, 53, 51, 49, 46, 44,
                                                        41, 38, 35, 32, 28, 24, 20, 15, 9,  7,  7,  6,  6};

}  // namespace detail

// Lowest accepted relative humidity at the given air temperature.
inline double stull_min_rh(double air_temp_c) {
    const auto& tab = detail::kStullColdDryRh;
    double x = air_temp_c - kStullMinTempC;
    if (x <= 0.0) return tab.front();
    double last = static_cast<double>(tab.size() - 1);
    if (x >= last + 1.0) return kStullMinRh;
    if (x >= last) return tab.back() + (kStullMinRh - tab.back()) * (x - last);
    auto i = static_cast<std::size_t>(x);
    double frac = x - static_cast<double>(i);
    return tab[i] + (tab[i + 1] - tab[i]) * frac;
}

inline bool stull_in_domain(double air_temp_c, double rh_percent) {
    return air_temp_c >= kStullMinTempC && air_temp_c <= kStullMaxTempC && rh_percent >= kStullMinRh &&
           rh_percent <= kStullMaxRh && rh_percent >= stull_min_rh(air_temp_c);
}

// Wet-bulb temperature (C) from air temperature (C) and relative humidity at
// sea-level pressure. Throws DomainError tagged "air_temp" or
// "relative_humidity" outside the fit's validity envelope.
inline double wet_bulb_from_stull(double air_temp_c, RelativeHumidity rh) {
    const double t = air_temp_c;
    const double r = rh.percent();
    if (!std::isfinite(t) || t < kStullMinTempC || t > kStullMaxTempC)
        throw DomainError("air_temp", "air temperature " + std::to_string(t) +
                                          " C outside the wet-bulb fit range [-20, 50] C");
    if (r < kStullMinRh || r > kStullMaxRh)
        throw DomainError("relative_humidity", "relative humidity " + std::to_string(r) +
                                                   " % outside the wet-bulb fit range [5, 99] %");
    if (r < stull_min_rh(t))
        throw DomainError("relative_humidity", "relative humidity " + std::to_string(r) + " % too low for " +
                                                   std::to_string(t) + " C (cold-dry corner of the wet-bulb fit)");

    return t * std::atan(0.151977 * std::sqrt(r + 8.313659)) + std::atan(t + r) - std::atan(r - 1.676331) +
           0.00391838 * std::pow(r, 1.5) * std::atan(0.023101 * r) - 4.686035;
}

}  // namespace wue
