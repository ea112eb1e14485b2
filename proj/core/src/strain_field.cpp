#include "vortexscore/strain_field.hpp"

#include "vortexscore/error.hpp"

#include <string>

namespace vortexscore {

std::string_view to_string(FlowKind kind) {
    switch (kind) {
    case FlowKind::Axisymmetric3D:
        return "axisymmetric3d";
    case FlowKind::Planar2D:
        return "planar2d";
    }
    return "unknown";
}

FlowKind parse_flow_kind(std::string_view name) {
    if (name == "axisymmetric3d" || name == "axi" || name == "3d") return FlowKind::Axisymmetric3D;
    if (name == "planar2d" || name == "planar" || name == "2d") return FlowKind::Planar2D;
    throw PreconditionError("unknown flow kind '" + std::string(name) + "'");
}

std::string_view to_string(Component c) { return c == Component::R ? "R" : "Z"; }

StrainConfig::StrainConfig(FlowKind kind, double a, double nu)
    : kind_(kind), a_(a), nu_(nu), sigma_(std::sqrt(2.0 * nu)) {
    if (!(a > 0.0) || !std::isfinite(a)) throw PreconditionError("strain rate a must be > 0");
    if (!(nu >= 0.0) || !std::isfinite(nu)) throw PreconditionError("viscosity nu must be >= 0");
}

namespace {

void require_positive_radius(const StrainConfig& cfg, State s) {
    if (cfg.kind() == FlowKind::Axisymmetric3D && !(s.r > 0.0))
        throw DomainError("axisymmetric drift undefined at r = " + std::to_string(s.r));
}

}  // namespace

Vec2 velocity(const StrainConfig& cfg, State s) {
    const double a = cfg.a();
    switch (cfg.kind()) {
    case FlowKind::Axisymmetric3D:
        return {-a * s.r, 2.0 * a * s.z};
    case FlowKind::Planar2D:
        return {-2.0 * a * s.r, 2.0 * a * s.z};
    }
    return {};
}

Vec2 drift(const StrainConfig& cfg, State s) {
    require_positive_radius(cfg, s);
    Vec2 u = velocity(cfg, s);
    if (cfg.kind() == FlowKind::Axisymmetric3D) u.r -= cfg.nu() / s.r;
    return u;
}

double reaction(const StrainConfig& cfg, State s) {
    require_positive_radius(cfg, s);
    const double a = cfg.a();
    if (cfg.kind() == FlowKind::Planar2D) return -2.0 * a + 2.0 * (2.0 * a);
    // d_r(-a r - nu/r) = -a + nu/r^2, 2 d_z(2 a z) = 4a, plus nu/r^2.
    const double nu_r2 = cfg.nu() / (s.r * s.r);
    return (-a + nu_r2) + 4.0 * a + nu_r2;
}

double forcing(const StrainConfig& cfg, State s) {
    require_positive_radius(cfg, s);
    return 0.0;
}

}  // namespace vortexscore
