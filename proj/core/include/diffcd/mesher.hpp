#pragma once

#include "diffcd/field.hpp"
#include "diffcd/rng.hpp"
#include "diffcd/types.hpp"

#include <array>
#include <filesystem>
#include <vector>

namespace diffcd {

/// Extracted zero-level set in 3D.
struct TriangleMesh {
    Points vertices;                        // 3 x V
    std::vector<std::array<int, 3>> faces;  // vertex indices
    std::vector<double> face_areas;
    Points face_normals;                    // 3 x F unit normals (zero for degenerate faces)
    double total_area = 0.0;

    bool empty() const { return faces.empty(); }
    /// Recomputes areas, normals, and total area from vertex positions and winding.
    void update_geometry();
    void validate() const;
};

/// Extracted zero-level set in 2D: a set of segments over shared vertices.
struct Contour2D {
    Points vertices;                        // 2 x V
    std::vector<std::array<int, 2>> segments;
    double total_length = 0.0;

    bool empty() const { return segments.empty(); }
    void update_length();
    /// Connected components as lists of vertex indices.
    std::vector<std::vector<int>> components() const;
};

/// Marching cubes over a resolution^3 lattice of cell corners spanning Ω.
/// Faces are wound so that their normal agrees with the field gradient at the
/// face centroid. Throws EmptyLevelSet if no cell has a sign change.
TriangleMesh marching_cubes(const ScalarField& field, const BoundingBox& domain, int resolution);

/// Marching squares over a resolution^2 lattice. Saddle cells are resolved by the
/// sign of the field at the cell center. Returns an empty contour when there is
/// no crossing.
Contour2D marching_squares(const ScalarField& field, const BoundingBox& domain, int resolution);

/// n points drawn by area-weighted face choice and uniform barycentric
/// coordinates. Optionally reports the face normal and face index of each sample.
Points sample_mesh_uniform(const TriangleMesh& mesh, std::size_t n, Rng& rng,
                           Points* normals = nullptr, std::vector<int>* face_ids = nullptr);

/// n points drawn uniformly by arc length; normals are the segment normals
/// oriented like the field gradient when `field` is given.
Points sample_contour_uniform(const Contour2D& contour, std::size_t n, Rng& rng,
                              Points* normals = nullptr, const ScalarField* field = nullptr);

/// Mesh quadrature of ∫_S 1/‖∇f‖ dS using face centroids.
double surface_integral_inv_gradnorm(const TriangleMesh& mesh, const ScalarField& field);
double surface_integral_inv_gradnorm(const Contour2D& contour, const ScalarField& field);

/// Dimension-dispatching convenience: extracts the level set (marching cubes or
/// squares) and samples it uniformly. Throws EmptyLevelSet if nothing is found.
Points sample_level_set(const ScalarField& field, const BoundingBox& domain, int resolution,
                        std::size_t n, Rng& rng, Points* normals = nullptr,
                        double* measure = nullptr);

// Export / import.
void write_obj(const std::filesystem::path& path, const TriangleMesh& mesh);
TriangleMesh read_obj(const std::filesystem::path& path);
void write_contour_csv(const std::filesystem::path& path, const Contour2D& contour);
/// SVG rendering of the contour (and optionally a point cloud) with the viewBox mapped from Ω.
void write_contour_svg(const std::filesystem::path& path, const Contour2D& contour,
                       const BoundingBox& domain, const Points* cloud = nullptr);

}  // namespace diffcd
