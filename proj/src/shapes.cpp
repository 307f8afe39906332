#include "gfrs/shapes.hpp"

#include "gfrs/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace gfrs {

namespace {

using Kind = AnalyticSurface::Kind;

Eigen::Vector3d sphere_point(double z_unit, double phi, double radius) {
    const double rho = std::sqrt(std::max(0.0, 1.0 - z_unit * z_unit));
    return radius * Eigen::Vector3d(rho * std::cos(phi), rho * std::sin(phi), z_unit);
}

// Inverse CDF of the torus latitude theta, density proportional to
// R + r*cos(theta) on [0, 2pi); solved by bisection.
double torus_theta(double u, double R, double r) {
    double lo = 0.0, hi = 2.0 * M_PI;
    const double total = 2.0 * M_PI * R;
    for (int it = 0; it < 80; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double cdf = (R * mid + r * std::sin(mid)) / total;
        (cdf < u ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

Eigen::Vector3d torus_point(double theta, double phi, double R, double r) {
    const double w = R + r * std::cos(theta);
    return {w * std::cos(phi), w * std::sin(phi), r * std::sin(theta)};
}

// First-parameter value for sample i: stratified jitter or plain uniform.
double primary_u(ShapeSampler sampler, int i, int count, CounterRng& rng) {
    if (sampler == ShapeSampler::stratified)
        return (static_cast<double>(i) + rng.uniform()) / static_cast<double>(count);
    return rng.uniform();
}

Eigen::Vector3d sample_point(const AnalyticSurface& s, ShapeSampler sampler, int i, int count,
                             CounterRng& rng) {
    switch (s.kind) {
        case Kind::sphere: {
            const double z = 2.0 * primary_u(sampler, i, count, rng) - 1.0; // area-uniform in z
            const double phi = rng.uniform(0.0, 2.0 * M_PI);
            return sphere_point(z, phi, s.a);
        }
        case Kind::torus: {
            const double theta = torus_theta(primary_u(sampler, i, count, rng), s.a, s.b);
            const double phi = rng.uniform(0.0, 2.0 * M_PI);
            return torus_point(theta, phi, s.a, s.b);
        }
        case Kind::box: {
            const double hx = s.a, hy = s.b, hz = s.c;
            const double areas[3] = {hy * hz, hx * hz, hx * hy}; // per face pair, /4
            const double total = 2.0 * (areas[0] + areas[1] + areas[2]);
            double u = primary_u(sampler, i, count, rng) * total;
            for (int axis = 0; axis < 3; ++axis) {
                for (const double sign : {-1.0, 1.0}) {
                    if (u > areas[axis] && !(axis == 2 && sign > 0.0)) {
                        u -= areas[axis];
                        continue;
                    }
                    Eigen::Vector3d p;
                    const int a1 = (axis + 1) % 3, a2 = (axis + 2) % 3;
                    const double h[3] = {hx, hy, hz};
                    p[axis] = sign * h[axis];
                    p[a1] = rng.uniform(-h[a1], h[a1]);
                    p[a2] = rng.uniform(-h[a2], h[a2]);
                    return p;
                }
            }
            return {hx, hy, hz}; // unreachable
        }
        case Kind::capsule: {
            const double h = s.a, r = s.b;
            const double side = 2.0 * M_PI * r * 2.0 * h;
            const double caps = 4.0 * M_PI * r * r;
            const double u = primary_u(sampler, i, count, rng) * (side + caps);
            if (u < side) {
                const double z = -h + (u / side) * 2.0 * h;
                const double phi = rng.uniform(0.0, 2.0 * M_PI);
                return {r * std::cos(phi), r * std::sin(phi), z};
            }
            // Hemispherical caps: area-uniform in |z|, sign picks the cap.
            const double v = (u - side) / caps; // in [0, 1)
            const double zcap = v < 0.5 ? 2.0 * v : 2.0 * (v - 0.5);
            const double sign = v < 0.5 ? -1.0 : 1.0;
            const double phi = rng.uniform(0.0, 2.0 * M_PI);
            const Eigen::Vector3d q = sphere_point(zcap, phi, r);
            return {q.x(), q.y(), sign * (h + q.z())};
        }
    }
    throw std::invalid_argument("sample_shape: unknown kind");
}

void push_quad(TriangleMesh& m, int a, int b, int c, int d) {
    m.faces.push_back({a, b, c});
    m.faces.push_back({a, c, d});
}

} // namespace

TriangleMesh make_mesh(const AnalyticSurface& s, int res) {
    if (res < 3) throw std::invalid_argument("make_mesh: resolution must be >= 3");
    TriangleMesh m;
    switch (s.kind) {
        case Kind::sphere: {
            // UV sphere with triangle fans at the poles.
            const int rings = res, segs = 2 * res;
            m.vertices.push_back({0.0, 0.0, s.a});
            for (int i = 1; i < rings; ++i) {
                const double th = M_PI * i / rings;
                for (int j = 0; j < segs; ++j) {
                    const double ph = 2.0 * M_PI * j / segs;
                    m.vertices.push_back(
                        s.a * Eigen::Vector3d(std::sin(th) * std::cos(ph),
                                              std::sin(th) * std::sin(ph), std::cos(th)));
                }
            }
            m.vertices.push_back({0.0, 0.0, -s.a});
            const int south = static_cast<int>(m.vertices.size()) - 1;
            auto ring = [&](int i, int j) { return 1 + (i - 1) * segs + (j % segs); };
            for (int j = 0; j < segs; ++j) m.faces.push_back({0, ring(1, j), ring(1, j + 1)});
            for (int i = 1; i < rings - 1; ++i)
                for (int j = 0; j < segs; ++j)
                    push_quad(m, ring(i, j), ring(i + 1, j), ring(i + 1, j + 1), ring(i, j + 1));
            for (int j = 0; j < segs; ++j)
                m.faces.push_back({south, ring(rings - 1, j + 1), ring(rings - 1, j)});
            break;
        }
        case Kind::torus: {
            const int nt = res, np = 2 * res;
            for (int i = 0; i < nt; ++i)
                for (int j = 0; j < np; ++j)
                    m.vertices.push_back(torus_point(2.0 * M_PI * i / nt, 2.0 * M_PI * j / np,
                                                     s.a, s.b));
            auto at = [&](int i, int j) { return (i % nt) * np + (j % np); };
            for (int i = 0; i < nt; ++i)
                for (int j = 0; j < np; ++j)
                    push_quad(m, at(i, j), at(i + 1, j), at(i + 1, j + 1), at(i, j + 1));
            break;
        }
        case Kind::box: {
            const Eigen::Vector3d h(s.a, s.b, s.c);
            for (int mask = 0; mask < 8; ++mask)
                m.vertices.push_back({(mask & 1 ? h.x() : -h.x()), (mask & 2 ? h.y() : -h.y()),
                                      (mask & 4 ? h.z() : -h.z())});
            push_quad(m, 0, 1, 3, 2); // z = -hz
            push_quad(m, 4, 6, 7, 5); // z = +hz
            push_quad(m, 0, 4, 5, 1); // y = -hy
            push_quad(m, 2, 3, 7, 6); // y = +hy
            push_quad(m, 0, 2, 6, 4); // x = -hx
            push_quad(m, 1, 5, 7, 3); // x = +hx
            break;
        }
        case Kind::capsule: {
            // Two UV hemispheres joined by a cylinder, shared seam rings.
            const int rings = res, segs = 2 * res;
            const double h = s.a, r = s.b;
            auto ring_at = [&](double z_offset, double th) {
                const int base = static_cast<int>(m.vertices.size());
                for (int j = 0; j < segs; ++j) {
                    const double ph = 2.0 * M_PI * j / segs;
                    m.vertices.push_back({r * std::sin(th) * std::cos(ph),
                                          r * std::sin(th) * std::sin(ph),
                                          z_offset + r * std::cos(th)});
                }
                return base;
            };
            m.vertices.push_back({0.0, 0.0, h + r});
            std::vector<int> bases;
            for (int i = 1; i <= rings / 2; ++i) bases.push_back(ring_at(h, M_PI * i / rings));
            const int cyl_steps = rings;
            for (int i = 1; i < cyl_steps; ++i) {
                const double z = h - 2.0 * h * i / cyl_steps;
                const int base = static_cast<int>(m.vertices.size());
                for (int j = 0; j < segs; ++j) {
                    const double ph = 2.0 * M_PI * j / segs;
                    m.vertices.push_back({r * std::cos(ph), r * std::sin(ph), z});
                }
                bases.push_back(base);
            }
            for (int i = rings / 2; i < rings; ++i) bases.push_back(ring_at(-h, M_PI * i / rings));
            m.vertices.push_back({0.0, 0.0, -h - r});
            const int south = static_cast<int>(m.vertices.size()) - 1;
            for (int j = 0; j < segs; ++j)
                m.faces.push_back({0, bases[0] + j, bases[0] + (j + 1) % segs});
            for (std::size_t i = 0; i + 1 < bases.size(); ++i)
                for (int j = 0; j < segs; ++j)
                    push_quad(m, bases[i] + j, bases[i + 1] + j, bases[i + 1] + (j + 1) % segs,
                              bases[i] + (j + 1) % segs);
            for (int j = 0; j < segs; ++j)
                m.faces.push_back({south, bases.back() + (j + 1) % segs, bases.back() + j});
            break;
        }
    }
    m.validate();
    return m;
}

ShapeSample sample_shape(const ShapeSpec& spec, int mesh_resolution) {
    if (spec.count < 16) throw std::invalid_argument("sample_shape: count must be >= 16");
    const AnalyticSurface& s = spec.surface;
    if (s.a <= 0.0) throw std::invalid_argument("sample_shape: non-positive parameter");
    if ((s.kind == Kind::torus || s.kind == Kind::capsule) && s.b <= 0.0)
        throw std::invalid_argument("sample_shape: non-positive parameter");
    if (s.kind == Kind::torus && s.b >= s.a)
        throw std::invalid_argument("sample_shape: torus tube radius must be below major radius");
    if (s.kind == Kind::box && (s.b <= 0.0 || s.c <= 0.0))
        throw std::invalid_argument("sample_shape: non-positive parameter");

    ShapeSample out;
    out.surface = s;
    CounterRng rng = CounterRng(spec.seed).substream(0x7368617065ULL);
    out.cloud.points.reserve(static_cast<std::size_t>(spec.count));
    for (int i = 0; i < spec.count; ++i)
        out.cloud.points.push_back(sample_point(s, spec.sampler, i, spec.count, rng));
    if (mesh_resolution > 0) out.mesh = make_mesh(s, mesh_resolution);
    return out;
}

} // namespace gfrs
