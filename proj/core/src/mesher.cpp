#include "diffcd/mesher.hpp"

#include "mc_tables.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

namespace diffcd {

// ---------------------------------------------------------------------------
// Geometry bookkeeping

void TriangleMesh::update_geometry() {
    const auto nf = faces.size();
    face_areas.assign(nf, 0.0);
    face_normals = Points::Zero(3, static_cast<Eigen::Index>(nf));
    total_area = 0.0;
    for (std::size_t f = 0; f < nf; ++f) {
        const auto& t = faces[f];
        const Eigen::Vector3d a = vertices.col(t[0]);
        const Eigen::Vector3d b = vertices.col(t[1]);
        const Eigen::Vector3d c = vertices.col(t[2]);
        const Eigen::Vector3d cross = (b - a).cross(c - a);
        const double twice = cross.norm();
        face_areas[f] = 0.5 * twice;
        if (twice > 0.0) face_normals.col(static_cast<Eigen::Index>(f)) = cross / twice;
    }
    // Fixed-order summation keeps the total reproducible.
    total_area = std::accumulate(face_areas.begin(), face_areas.end(), 0.0);
}

void TriangleMesh::validate() const {
    if (vertices.rows() != 3) throw InputError("mesh vertices must be 3-dimensional");
    for (const auto& t : faces) {
        for (int v : t) {
            if (v < 0 || v >= vertices.cols()) throw InputError("mesh face index out of range");
        }
    }
}

void Contour2D::update_length() {
    total_length = 0.0;
    for (const auto& s : segments) total_length += (vertices.col(s[1]) - vertices.col(s[0])).norm();
}

std::vector<std::vector<int>> Contour2D::components() const {
    std::vector<int> parent(static_cast<std::size_t>(vertices.cols()));
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int v) {
        while (parent[v] != v) {
            parent[v] = parent[parent[v]];
            v = parent[v];
        }
        return v;
    };
    std::vector<char> used(parent.size(), 0);
    for (const auto& s : segments) {
        used[s[0]] = used[s[1]] = 1;
        const int a = find(s[0]);
        const int b = find(s[1]);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
    std::vector<int> label(parent.size(), -1);
    std::vector<std::vector<int>> out;
    for (int v = 0; v < static_cast<int>(parent.size()); ++v) {
        if (!used[v]) continue;
        const int r = find(v);
        if (label[r] < 0) {
            label[r] = static_cast<int>(out.size());
            out.emplace_back();
        }
        out[label[r]].push_back(v);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Marching cubes

namespace {

void check_lattice(const BoundingBox& domain, int resolution, int dim) {
    domain.validate();
    if (domain.dim() != dim) throw InputError("extraction domain has the wrong dimension");
    if (resolution < 2) throw InputError("extraction resolution must be >= 2");
}

// Vertex on lattice edge (a, b) by linear interpolation of the field values.
Eigen::Vector3d interpolate(const Eigen::Vector3d& pa, const Eigen::Vector3d& pb, double va,
                            double vb) {
    const double t = va / (va - vb);
    return pa + t * (pb - pa);
}

}  // namespace

TriangleMesh marching_cubes(const ScalarField& field, const BoundingBox& domain, int resolution) {
    check_lattice(domain, resolution, 3);
    if (field.dim() != 3) throw InputError("marching_cubes needs a 3D field");

    const int R = resolution;
    const Eigen::Vector3d lo = domain.lower;
    const Eigen::Vector3d h = domain.extent() / double(R - 1);
    auto corner = [&](int i, int j, int k) {
        return Eigen::Vector3d(lo.x() + i * h.x(), lo.y() + j * h.y(), lo.z() + k * h.z());
    };
    const auto slice_size = static_cast<std::size_t>(R) * static_cast<std::size_t>(R);
    auto at = [R](int i, int j) { return static_cast<std::size_t>(i) + static_cast<std::size_t>(R) * j; };

    std::vector<double> verts;
    auto add_vertex = [&](const Eigen::Vector3d& p) {
        verts.insert(verts.end(), {p.x(), p.y(), p.z()});
        return static_cast<int>(verts.size() / 3 - 1);
    };

    std::array<Vector, 2> values;
    std::array<std::vector<int>, 2> xid, yid;
    std::vector<int> zid(slice_size, -1);
    Points slice_pts(3, static_cast<Eigen::Index>(slice_size));

    auto load_slice = [&](int k) {
        const int s = k & 1;
        for (int j = 0; j < R; ++j) {
            for (int i = 0; i < R; ++i) slice_pts.col(static_cast<Eigen::Index>(at(i, j))) = corner(i, j, k);
        }
        field.evaluate(slice_pts, values[s], nullptr);
        const Vector& v = values[s];
        xid[s].assign(slice_size, -1);
        yid[s].assign(slice_size, -1);
        for (int j = 0; j < R; ++j) {
            for (int i = 0; i < R; ++i) {
                const double a = v[at(i, j)];
                if (i + 1 < R) {
                    const double b = v[at(i + 1, j)];
                    if ((a < 0.0) != (b < 0.0)) {
                        xid[s][at(i, j)] = add_vertex(interpolate(corner(i, j, k), corner(i + 1, j, k), a, b));
                    }
                }
                if (j + 1 < R) {
                    const double b = v[at(i, j + 1)];
                    if ((a < 0.0) != (b < 0.0)) {
                        yid[s][at(i, j)] = add_vertex(interpolate(corner(i, j, k), corner(i, j + 1, k), a, b));
                    }
                }
            }
        }
    };

    TriangleMesh mesh;
    load_slice(0);
    for (int k = 0; k + 1 < R; ++k) {
        load_slice(k + 1);
        const int s0 = k & 1;
        const int s1 = (k + 1) & 1;
        const Vector& v0 = values[s0];
        const Vector& v1 = values[s1];
        for (int j = 0; j < R; ++j) {
            for (int i = 0; i < R; ++i) {
                const double a = v0[at(i, j)];
                const double b = v1[at(i, j)];
                zid[at(i, j)] = ((a < 0.0) != (b < 0.0))
                                    ? add_vertex(interpolate(corner(i, j, k), corner(i, j, k + 1), a, b))
                                    : -1;
            }
        }
        for (int j = 0; j + 1 < R; ++j) {
            for (int i = 0; i + 1 < R; ++i) {
                const std::array<double, 8> c = {v0[at(i, j)],     v0[at(i + 1, j)],
                                                 v0[at(i + 1, j + 1)], v0[at(i, j + 1)],
                                                 v1[at(i, j)],     v1[at(i + 1, j)],
                                                 v1[at(i + 1, j + 1)], v1[at(i, j + 1)]};
                int cube = 0;
                for (int q = 0; q < 8; ++q) {
                    if (c[q] < 0.0) cube |= 1 << q;
                }
                if (cube == 0 || cube == 255) continue;
                const std::array<int, 12> edge = {
                    xid[s0][at(i, j)], yid[s0][at(i + 1, j)], xid[s0][at(i, j + 1)], yid[s0][at(i, j)],
                    xid[s1][at(i, j)], yid[s1][at(i + 1, j)], xid[s1][at(i, j + 1)], yid[s1][at(i, j)],
                    zid[at(i, j)],     zid[at(i + 1, j)],     zid[at(i + 1, j + 1)], zid[at(i, j + 1)]};
                const int* row = detail::kTriTable[cube];
                for (int m = 0; row[m] != -1; m += 3) {
                    mesh.faces.push_back({edge[row[m]], edge[row[m + 1]], edge[row[m + 2]]});
                }
            }
        }
    }

    if (mesh.faces.empty()) {
        throw EmptyLevelSet("marching cubes found no zero crossing in the domain");
    }
    mesh.vertices = Eigen::Map<const Points>(verts.data(), 3, static_cast<Eigen::Index>(verts.size() / 3));

    // Orient every face along the field gradient at its centroid.
    Points centroids(3, static_cast<Eigen::Index>(mesh.faces.size()));
    for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
        const auto& t = mesh.faces[f];
        centroids.col(static_cast<Eigen::Index>(f)) =
            (mesh.vertices.col(t[0]) + mesh.vertices.col(t[1]) + mesh.vertices.col(t[2])) / 3.0;
    }
    Vector cv;
    Points cg;
    field.evaluate(centroids, cv, &cg);
    for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
        auto& t = mesh.faces[f];
        const Eigen::Vector3d a = mesh.vertices.col(t[0]);
        const Eigen::Vector3d n = (Eigen::Vector3d(mesh.vertices.col(t[1])) - a)
                                      .cross(Eigen::Vector3d(mesh.vertices.col(t[2])) - a);
        if (n.dot(cg.col(static_cast<Eigen::Index>(f))) < 0.0) std::swap(t[1], t[2]);
    }
    mesh.update_geometry();
    return mesh;
}

// ---------------------------------------------------------------------------
// Marching squares

Contour2D marching_squares(const ScalarField& field, const BoundingBox& domain, int resolution) {
    check_lattice(domain, resolution, 2);
    if (field.dim() != 2) throw InputError("marching_squares needs a 2D field");

    const int R = resolution;
    const Eigen::Vector2d lo = domain.lower;
    const Eigen::Vector2d h = domain.extent() / double(R - 1);
    auto corner = [&](int i, int j) { return Eigen::Vector2d(lo.x() + i * h.x(), lo.y() + j * h.y()); };
    auto at = [R](int i, int j) { return static_cast<Eigen::Index>(i) + static_cast<Eigen::Index>(R) * j; };

    Points grid(2, static_cast<Eigen::Index>(R) * R);
    for (int j = 0; j < R; ++j) {
        for (int i = 0; i < R; ++i) grid.col(at(i, j)) = corner(i, j);
    }
    Vector v;
    field.evaluate(grid, v, nullptr);

    std::vector<double> verts;
    auto add_vertex = [&](const Eigen::Vector2d& pa, const Eigen::Vector2d& pb, double a, double b) {
        const Eigen::Vector2d p = pa + (a / (a - b)) * (pb - pa);
        verts.insert(verts.end(), {p.x(), p.y()});
        return static_cast<int>(verts.size() / 2 - 1);
    };
    std::vector<int> xid(static_cast<std::size_t>(R) * R, -1), yid(static_cast<std::size_t>(R) * R, -1);
    for (int j = 0; j < R; ++j) {
        for (int i = 0; i < R; ++i) {
            const double a = v[at(i, j)];
            if (i + 1 < R && (a < 0.0) != (v[at(i + 1, j)] < 0.0)) {
                xid[at(i, j)] = add_vertex(corner(i, j), corner(i + 1, j), a, v[at(i + 1, j)]);
            }
            if (j + 1 < R && (a < 0.0) != (v[at(i, j + 1)] < 0.0)) {
                yid[at(i, j)] = add_vertex(corner(i, j), corner(i, j + 1), a, v[at(i, j + 1)]);
            }
        }
    }

    // Saddle cells need the center sign.
    std::vector<std::array<int, 2>> saddles;
    auto case_of = [&](int i, int j) {
        int c = 0;
        if (v[at(i, j)] < 0.0) c |= 1;
        if (v[at(i + 1, j)] < 0.0) c |= 2;
        if (v[at(i + 1, j + 1)] < 0.0) c |= 4;
        if (v[at(i, j + 1)] < 0.0) c |= 8;
        return c;
    };
    for (int j = 0; j + 1 < R; ++j) {
        for (int i = 0; i + 1 < R; ++i) {
            const int c = case_of(i, j);
            if (c == 5 || c == 10) saddles.push_back({i, j});
        }
    }
    Points centers(2, static_cast<Eigen::Index>(saddles.size()));
    for (std::size_t s = 0; s < saddles.size(); ++s) {
        centers.col(static_cast<Eigen::Index>(s)) = corner(saddles[s][0], saddles[s][1]) + 0.5 * h;
    }
    Vector center_values;
    if (!saddles.empty()) field.evaluate(centers, center_values, nullptr);

    // Edge pairs per case; edges 0: bottom, 1: right, 2: top, 3: left.
    static constexpr int kPairs[16][4] = {
        {-1, -1, -1, -1}, {3, 0, -1, -1}, {0, 1, -1, -1}, {3, 1, -1, -1},
        {1, 2, -1, -1},   {-1, -1, -1, -1}, {0, 2, -1, -1}, {2, 3, -1, -1},
        {2, 3, -1, -1},   {0, 2, -1, -1}, {-1, -1, -1, -1}, {1, 2, -1, -1},
        {1, 3, -1, -1},   {0, 1, -1, -1}, {0, 3, -1, -1}, {-1, -1, -1, -1}};
    static constexpr int kCutOdd[4] = {0, 1, 2, 3};   // isolate corners 1 and 3
    static constexpr int kCutEven[4] = {3, 0, 1, 2};  // isolate corners 0 and 2

    Contour2D contour;
    std::size_t saddle_index = 0;
    for (int j = 0; j + 1 < R; ++j) {
        for (int i = 0; i + 1 < R; ++i) {
            const int c = case_of(i, j);
            if (c == 0 || c == 15) continue;
            const std::array<int, 4> edge = {xid[at(i, j)], yid[at(i + 1, j)], xid[at(i, j + 1)], yid[at(i, j)]};
            const int* pairs = kPairs[c];
            if (c == 5 || c == 10) {
                const bool center_inside = center_values[static_cast<Eigen::Index>(saddle_index++)] < 0.0;
                // Inside corners joined through the center means the outside corners are cut off.
                const bool cut_odd = (c == 5) == center_inside;
                pairs = cut_odd ? kCutOdd : kCutEven;
            }
            for (int m = 0; m < 4 && pairs[m] != -1; m += 2) {
                contour.segments.push_back({edge[pairs[m]], edge[pairs[m + 1]]});
            }
        }
    }
    contour.vertices = Eigen::Map<const Points>(verts.data(), 2, static_cast<Eigen::Index>(verts.size() / 2));
    contour.update_length();
    return contour;
}

// ---------------------------------------------------------------------------
// Sampling

namespace {

std::vector<double> cumulative(const std::vector<double>& weights) {
    std::vector<double> cdf(weights.size());
    std::partial_sum(weights.begin(), weights.end(), cdf.begin());
    return cdf;
}

std::size_t pick(const std::vector<double>& cdf, Rng& rng) {
    const double u = rng.uniform(0.0, cdf.back());
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    return std::min<std::size_t>(static_cast<std::size_t>(it - cdf.begin()), cdf.size() - 1);
}

}  // namespace

Points sample_mesh_uniform(const TriangleMesh& mesh, std::size_t n, Rng& rng, Points* normals,
                           std::vector<int>* face_ids) {
    if (mesh.empty() || !(mesh.total_area > 0.0)) throw EmptyLevelSet("cannot sample an empty mesh");
    const auto cdf = cumulative(mesh.face_areas);
    Points out(3, static_cast<Eigen::Index>(n));
    if (normals) normals->resize(3, static_cast<Eigen::Index>(n));
    if (face_ids) face_ids->resize(n);
    for (std::size_t s = 0; s < n; ++s) {
        const std::size_t f = pick(cdf, rng);
        const auto& t = mesh.faces[f];
        const double r1 = std::sqrt(rng.uniform());
        const double r2 = rng.uniform();
        const double wa = 1.0 - r1;
        const double wb = r1 * (1.0 - r2);
        const double wc = r1 * r2;
        const auto col = static_cast<Eigen::Index>(s);
        out.col(col) = wa * mesh.vertices.col(t[0]) + wb * mesh.vertices.col(t[1]) +
                       wc * mesh.vertices.col(t[2]);
        if (normals) normals->col(col) = mesh.face_normals.col(static_cast<Eigen::Index>(f));
        if (face_ids) (*face_ids)[s] = static_cast<int>(f);
    }
    return out;
}

Points sample_contour_uniform(const Contour2D& contour, std::size_t n, Rng& rng, Points* normals,
                              const ScalarField* field) {
    if (contour.empty() || !(contour.total_length > 0.0)) {
        throw EmptyLevelSet("cannot sample an empty contour");
    }
    std::vector<double> lengths(contour.segments.size());
    Points seg_normals(2, static_cast<Eigen::Index>(contour.segments.size()));
    Points mids(2, seg_normals.cols());
    for (std::size_t s = 0; s < contour.segments.size(); ++s) {
        const Eigen::Vector2d a = contour.vertices.col(contour.segments[s][0]);
        const Eigen::Vector2d b = contour.vertices.col(contour.segments[s][1]);
        const Eigen::Vector2d d = b - a;
        lengths[s] = d.norm();
        const auto col = static_cast<Eigen::Index>(s);
        seg_normals.col(col) = lengths[s] > 0.0 ? Eigen::Vector2d(Eigen::Vector2d(-d.y(), d.x()) / lengths[s])
                                                : Eigen::Vector2d(Eigen::Vector2d::Zero());
        mids.col(col) = 0.5 * (a + b);
    }
    if (normals && field) {
        Vector mv;
        Points mg;
        field->evaluate(mids, mv, &mg);
        for (Eigen::Index s = 0; s < mids.cols(); ++s) {
            if (seg_normals.col(s).dot(mg.col(s)) < 0.0) seg_normals.col(s) *= -1.0;
        }
    }
    const auto cdf = cumulative(lengths);
    Points out(2, static_cast<Eigen::Index>(n));
    if (normals) normals->resize(2, static_cast<Eigen::Index>(n));
    for (std::size_t s = 0; s < n; ++s) {
        const std::size_t seg = pick(cdf, rng);
        const double t = rng.uniform();
        const auto col = static_cast<Eigen::Index>(s);
        out.col(col) = (1.0 - t) * contour.vertices.col(contour.segments[seg][0]) +
                       t * contour.vertices.col(contour.segments[seg][1]);
        if (normals) normals->col(col) = seg_normals.col(static_cast<Eigen::Index>(seg));
    }
    return out;
}

namespace {

double weighted_inverse_gradnorm(const Points& centroids, const std::vector<double>& measure,
                                 const ScalarField& field) {
    Vector values;
    Points grads;
    field.evaluate(centroids, values, &grads);
    double total = 0.0;
    for (Eigen::Index f = 0; f < centroids.cols(); ++f) {
        const double g = grads.col(f).norm();
        if (g < 1e-8) throw NumericalError("gradient vanishes on the surface; 1/|g| is unbounded");
        total += measure[static_cast<std::size_t>(f)] / g;
    }
    return total;
}

}  // namespace

double surface_integral_inv_gradnorm(const TriangleMesh& mesh, const ScalarField& field) {
    Points centroids(3, static_cast<Eigen::Index>(mesh.faces.size()));
    for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
        const auto& t = mesh.faces[f];
        centroids.col(static_cast<Eigen::Index>(f)) =
            (mesh.vertices.col(t[0]) + mesh.vertices.col(t[1]) + mesh.vertices.col(t[2])) / 3.0;
    }
    return weighted_inverse_gradnorm(centroids, mesh.face_areas, field);
}

double surface_integral_inv_gradnorm(const Contour2D& contour, const ScalarField& field) {
    Points mids(2, static_cast<Eigen::Index>(contour.segments.size()));
    std::vector<double> lengths(contour.segments.size());
    for (std::size_t s = 0; s < contour.segments.size(); ++s) {
        const auto a = contour.vertices.col(contour.segments[s][0]);
        const auto b = contour.vertices.col(contour.segments[s][1]);
        mids.col(static_cast<Eigen::Index>(s)) = 0.5 * (a + b);
        lengths[s] = (b - a).norm();
    }
    return weighted_inverse_gradnorm(mids, lengths, field);
}

Points sample_level_set(const ScalarField& field, const BoundingBox& domain, int resolution,
                        std::size_t n, Rng& rng, Points* normals, double* measure) {
    if (field.dim() == 3) {
        const TriangleMesh mesh = marching_cubes(field, domain, resolution);
        if (measure) *measure = mesh.total_area;
        return sample_mesh_uniform(mesh, n, rng, normals);
    }
    const Contour2D contour = marching_squares(field, domain, resolution);
    if (contour.empty()) throw EmptyLevelSet("marching squares found no zero crossing in the domain");
    if (measure) *measure = contour.total_length;
    return sample_contour_uniform(contour, n, rng, normals, &field);
}

// ---------------------------------------------------------------------------
// IO

void write_obj(const std::filesystem::path& path, const TriangleMesh& mesh) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot open for writing: " + path.string());
    char buf[128];
    for (Eigen::Index v = 0; v < mesh.vertices.cols(); ++v) {
        std::snprintf(buf, sizeof(buf), "v %.9g %.9g %.9g\n", mesh.vertices(0, v), mesh.vertices(1, v),
                      mesh.vertices(2, v));
        out << buf;
    }
    for (const auto& t : mesh.faces) out << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
    if (!out) throw InputError("write failed: " + path.string());
}

TriangleMesh read_obj(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open mesh: " + path.string());
    std::vector<double> verts;
    TriangleMesh mesh;
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream ss(line);
        std::string tag;
        ss >> tag;
        if (tag == "v") {
            double x, y, z;
            if (!(ss >> x >> y >> z)) throw InputError("malformed OBJ vertex: " + line);
            verts.insert(verts.end(), {x, y, z});
        } else if (tag == "f") {
            std::vector<int> idx;
            std::string tok;
            const int nv = static_cast<int>(verts.size() / 3);
            while (ss >> tok) {
                const int i = std::stoi(tok.substr(0, tok.find('/')));
                idx.push_back(i < 0 ? nv + i : i - 1);
            }
            if (idx.size() < 3) throw InputError("OBJ face with fewer than 3 vertices: " + line);
            for (std::size_t k = 1; k + 1 < idx.size(); ++k) mesh.faces.push_back({idx[0], idx[k], idx[k + 1]});
        }
    }
    mesh.vertices = Eigen::Map<const Points>(verts.data(), 3, static_cast<Eigen::Index>(verts.size() / 3));
    mesh.validate();
    mesh.update_geometry();
    return mesh;
}

void write_contour_csv(const std::filesystem::path& path, const Contour2D& contour) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot open for writing: " + path.string());
    out << "x0,y0,x1,y1\n";
    char buf[160];
    for (const auto& s : contour.segments) {
        std::snprintf(buf, sizeof(buf), "%.9g,%.9g,%.9g,%.9g\n", contour.vertices(0, s[0]),
                      contour.vertices(1, s[0]), contour.vertices(0, s[1]), contour.vertices(1, s[1]));
        out << buf;
    }
}

void write_contour_svg(const std::filesystem::path& path, const Contour2D& contour,
                       const BoundingBox& domain, const Points* cloud) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot open for writing: " + path.string());
    constexpr double kSize = 512.0;
    const Eigen::Vector2d lo = domain.lower;
    const Eigen::Vector2d ext = domain.extent();
    auto map = [&](const Eigen::Vector2d& p) {
        return Eigen::Vector2d((p.x() - lo.x()) / ext.x() * kSize, (1.0 - (p.y() - lo.y()) / ext.y()) * kSize);
    };
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 " << kSize << ' ' << kSize
        << "\" width=\"" << kSize << "\" height=\"" << kSize << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\" stroke=\"#888\"/>\n";
    char buf[200];
    for (const auto& s : contour.segments) {
        const Eigen::Vector2d a = map(contour.vertices.col(s[0]));
        const Eigen::Vector2d b = map(contour.vertices.col(s[1]));
        std::snprintf(buf, sizeof(buf),
                      "<polyline points=\"%.3f,%.3f %.3f,%.3f\" stroke=\"black\" stroke-width=\"1.5\" fill=\"none\"/>\n",
                      a.x(), a.y(), b.x(), b.y());
        out << buf;
    }
    if (cloud) {
        for (Eigen::Index i = 0; i < cloud->cols(); ++i) {
            const Eigen::Vector2d p = map(cloud->col(i));
            std::snprintf(buf, sizeof(buf), "<circle cx=\"%.3f\" cy=\"%.3f\" r=\"2\" fill=\"#1f77b4\"/>\n", p.x(), p.y());
            out << buf;
        }
    }
    out << "</svg>\n";
}

}  // namespace diffcd
