#pragma once

#include <cmath>
#include <string>
#include <string_view>

namespace vortexscore {

enum class FlowKind { Axisymmetric3D, Planar2D };

std::string_view to_string(FlowKind kind);
FlowKind parse_flow_kind(std::string_view name);

/// Two-component vector in the (r, z) plane. Used for positions, velocities and drifts.
struct Vec2 {
    double r = 0.0;
    double z = 0.0;

    friend constexpr Vec2 operator+(Vec2 a, Vec2 b) { return {a.r + b.r, a.z + b.z}; }
    friend constexpr Vec2 operator-(Vec2 a, Vec2 b) { return {a.r - b.r, a.z - b.z}; }
    friend constexpr Vec2 operator*(double s, Vec2 a) { return {s * a.r, s * a.z}; }
    friend constexpr bool operator==(Vec2 a, Vec2 b) = default;
};

using State = Vec2;

enum class Component { R, Z };

constexpr double component(Vec2 v, Component c) { return c == Component::R ? v.r : v.z; }
std::string_view to_string(Component c);

/// Steady strain field parameters. sigma is always sqrt(2 nu) and is never stored independently.
///
/// nu == 0 is accepted as a deterministic (noise-free) mode; a must be strictly positive.
class StrainConfig {
public:
    StrainConfig(FlowKind kind, double a, double nu);

    FlowKind kind() const { return kind_; }
    double a() const { return a_; }
    double nu() const { return nu_; }
    double sigma() const { return sigma_; }

    friend bool operator==(const StrainConfig&, const StrainConfig&) = default;

private:
    FlowKind kind_;
    double a_;
    double nu_;
    double sigma_;
};

/// Fluid velocity (U_r, U_z).
/// Axisymmetric3D: (-a r, 2 a z). Planar2D: (-2 a r, 2 a z).
Vec2 velocity(const StrainConfig& cfg, State s);

/// Effective Fokker-Planck drift. Axisymmetric3D subtracts nu / r from the radial velocity;
/// throws DomainError for r <= 0. Planar2D drift is the velocity.
Vec2 drift(const StrainConfig& cfg, State s);

/// Reaction coefficient S = d_r B_r + 2 d_z B_z + nu / r^2.
/// Axisymmetric3D with Burgers strain: 3a + 2 nu / r^2. Planar2D drops the nu / r^2 term: 2a.
double reaction(const StrainConfig& cfg, State s);

/// External forcing F = omega_r d_r U_z. Zero for every field implemented here, since
/// U_z does not depend on r.
double forcing(const StrainConfig& cfg, State s);

}  // namespace vortexscore
