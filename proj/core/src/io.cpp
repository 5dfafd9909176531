#include "diffcd/io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace diffcd {

namespace {

std::ifstream open_input(const std::filesystem::path& path, std::ios::openmode mode = std::ios::in) {
    std::ifstream in(path, mode);
    if (!in) throw InputError("cannot open input file: " + path.string());
    return in;
}

PointCloud from_rows(const std::vector<double>& values, std::size_t rows, int dim, bool normals) {
    const int stride = normals ? 2 * dim : dim;
    PointCloud cloud;
    cloud.points.resize(dim, static_cast<Eigen::Index>(rows));
    if (normals) cloud.normals = Points(dim, static_cast<Eigen::Index>(rows));
    for (std::size_t r = 0; r < rows; ++r) {
        for (int d = 0; d < dim; ++d) {
            cloud.points(d, static_cast<Eigen::Index>(r)) = values[r * stride + d];
            if (normals) (*cloud.normals)(d, static_cast<Eigen::Index>(r)) = values[r * stride + dim + d];
        }
    }
    return cloud;
}

enum class PlyType { I8, U8, I16, U16, I32, U32, F32, F64 };

PlyType parse_ply_type(const std::string& t) {
    if (t == "char" || t == "int8") return PlyType::I8;
    if (t == "uchar" || t == "uint8") return PlyType::U8;
    if (t == "short" || t == "int16") return PlyType::I16;
    if (t == "ushort" || t == "uint16") return PlyType::U16;
    if (t == "int" || t == "int32") return PlyType::I32;
    if (t == "uint" || t == "uint32") return PlyType::U32;
    if (t == "float" || t == "float32") return PlyType::F32;
    if (t == "double" || t == "float64") return PlyType::F64;
    throw InputError("PLY: unsupported property type '" + t + "'");
}

std::size_t ply_size(PlyType t) {
    switch (t) {
    case PlyType::I8:
    case PlyType::U8: return 1;
    case PlyType::I16:
    case PlyType::U16: return 2;
    case PlyType::I32:
    case PlyType::U32:
    case PlyType::F32: return 4;
    case PlyType::F64: return 8;
    }
    return 0;
}

template <typename T>
T load_le(const unsigned char* p) {
    static_assert(std::endian::native == std::endian::little, "big-endian hosts are not supported");
    T v;
    std::memcpy(&v, p, sizeof(T));
    return v;
}

double decode(PlyType t, const unsigned char* p) {
    switch (t) {
    case PlyType::I8: return load_le<std::int8_t>(p);
    case PlyType::U8: return load_le<std::uint8_t>(p);
    case PlyType::I16: return load_le<std::int16_t>(p);
    case PlyType::U16: return load_le<std::uint16_t>(p);
    case PlyType::I32: return load_le<std::int32_t>(p);
    case PlyType::U32: return load_le<std::uint32_t>(p);
    case PlyType::F32: return load_le<float>(p);
    case PlyType::F64: return load_le<double>(p);
    }
    return 0.0;
}

}  // namespace

PointCloud read_xyz(const std::filesystem::path& path, int dim) {
    auto in = open_input(path);
    std::vector<double> values;
    std::size_t rows = 0;
    int columns = -1;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ss(line);
        int count = 0;
        std::string tok;
        while (ss >> tok) {
            double v;
            try {
                std::size_t used = 0;
                v = std::stod(tok, &used);
                if (used != tok.size()) throw std::invalid_argument(tok);
            } catch (const std::exception&) {
                throw InputError(path.string() + ":" + std::to_string(line_no) + ": not a number: " + tok);
            }
            values.push_back(v);
            ++count;
        }
        if (count == 0) continue;
        if (columns < 0) columns = count;
        if (count != columns) {
            throw InputError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                             std::to_string(columns) + " columns, got " + std::to_string(count));
        }
        ++rows;
    }
    if (rows == 0) throw InputError("point cloud file has no points: " + path.string());
    if (dim == 0) {
        if (columns == 2 || columns == 4) dim = 2;
        else if (columns == 3 || columns == 6) dim = 3;
        else throw InputError("cannot infer dimension from " + std::to_string(columns) + " columns in " + path.string());
    }
    if (columns != dim && columns != 2 * dim) {
        throw InputError(path.string() + ": " + std::to_string(columns) + " columns do not fit dimension " +
                         std::to_string(dim));
    }
    return from_rows(values, rows, dim, columns == 2 * dim);
}

PointCloud read_ply(const std::filesystem::path& path) {
    auto in = open_input(path, std::ios::in | std::ios::binary);
    std::string line;
    std::getline(in, line);
    if (line.rfind("ply", 0) != 0) throw InputError("not a PLY file: " + path.string());

    bool binary = false;
    std::size_t vertex_count = 0;
    bool in_vertex = false;
    bool seen_vertex = false;
    std::vector<std::pair<std::string, PlyType>> props;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::istringstream ss(line);
        std::string kw;
        ss >> kw;
        if (kw == "format") {
            std::string fmt;
            ss >> fmt;
            if (fmt == "binary_little_endian") binary = true;
            else if (fmt != "ascii") throw InputError("PLY: unsupported format '" + fmt + "'");
        } else if (kw == "element") {
            std::string name;
            std::size_t count = 0;
            ss >> name >> count;
            if (name == "vertex") {
                vertex_count = count;
                in_vertex = true;
                seen_vertex = true;
            } else {
                if (!seen_vertex) throw InputError("PLY: the vertex element must come first");
                in_vertex = false;
            }
        } else if (kw == "property" && in_vertex) {
            std::string type, name;
            ss >> type;
            if (type == "list") throw InputError("PLY: list properties on vertices are not supported");
            ss >> name;
            props.emplace_back(name, parse_ply_type(type));
        } else if (kw == "end_header") {
            break;
        }
    }
    if (!seen_vertex || vertex_count == 0) throw InputError("PLY has no vertices: " + path.string());

    auto find = [&](const char* name) -> int {
        for (std::size_t i = 0; i < props.size(); ++i) {
            if (props[i].first == name) return static_cast<int>(i);
        }
        return -1;
    };
    const std::array<int, 3> pos = {find("x"), find("y"), find("z")};
    const std::array<int, 3> nrm = {find("nx"), find("ny"), find("nz")};
    if (pos[0] < 0 || pos[1] < 0) throw InputError("PLY: vertex element lacks x/y");
    const int dim = pos[2] >= 0 ? 3 : 2;
    const bool normals = nrm[0] >= 0 && nrm[1] >= 0 && (dim == 2 || nrm[2] >= 0);

    std::vector<double> row(props.size());
    std::vector<double> values;
    values.reserve(vertex_count * static_cast<std::size_t>(normals ? 2 * dim : dim));
    std::size_t record = 0;
    for (const auto& p : props) record += ply_size(p.second);
    std::vector<unsigned char> buf(record);
    for (std::size_t v = 0; v < vertex_count; ++v) {
        if (binary) {
            if (!in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(record))) {
                throw InputError("PLY: truncated binary vertex data in " + path.string());
            }
            std::size_t off = 0;
            for (std::size_t i = 0; i < props.size(); ++i) {
                row[i] = decode(props[i].second, buf.data() + off);
                off += ply_size(props[i].second);
            }
        } else {
            for (std::size_t i = 0; i < props.size(); ++i) {
                if (!(in >> row[i])) throw InputError("PLY: truncated ASCII vertex data in " + path.string());
            }
        }
        for (int d = 0; d < dim; ++d) values.push_back(row[pos[d]]);
        if (normals) {
            for (int d = 0; d < dim; ++d) values.push_back(row[nrm[d]]);
        }
    }
    return from_rows(values, vertex_count, dim, normals);
}

PointCloud read_point_cloud(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw InputError("input file does not exist: " + path.string());
    auto ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext == ".ply" ? read_ply(path) : read_xyz(path);
}

void write_xyz(const std::filesystem::path& path, const PointCloud& cloud) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot open for writing: " + path.string());
    char buf[48];
    for (Eigen::Index j = 0; j < cloud.points.cols(); ++j) {
        for (Eigen::Index d = 0; d < cloud.points.rows(); ++d) {
            std::snprintf(buf, sizeof(buf), d ? " %.17g" : "%.17g", cloud.points(d, j));
            out << buf;
        }
        if (cloud.normals) {
            for (Eigen::Index d = 0; d < cloud.points.rows(); ++d) {
                std::snprintf(buf, sizeof(buf), " %.17g", (*cloud.normals)(d, j));
                out << buf;
            }
        }
        out << '\n';
    }
}

}  // namespace diffcd
