#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "nrr/common.hpp"
#include "nrr/surface.hpp"

namespace nrr {

namespace io_detail {

inline std::string lower_ext(const std::string& path) {
    const auto dot = path.find_last_of('.');
    if (dot == std::string::npos) return "";
    std::string ext = path.substr(dot + 1);
    for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return ext;
}

[[noreturn]] inline void fail(const std::string& path, size_t line, const std::string& what) {
    throw IoError(path + ":" + std::to_string(line) + ": " + what);
}

inline int ply_type_size(const std::string& t) {
    if (t == "char" || t == "int8" || t == "uchar" || t == "uint8") return 1;
    if (t == "short" || t == "int16" || t == "ushort" || t == "uint16") return 2;
    if (t == "int" || t == "int32" || t == "uint" || t == "uint32" || t == "float" ||
        t == "float32")
        return 4;
    if (t == "double" || t == "float64") return 8;
    return 0;
}

inline double ply_read_binary(std::istream& in, const std::string& type,
                              const std::string& path) {
    unsigned char buf[8];
    const int size = ply_type_size(type);
    if (size == 0) throw IoError(path + ": unsupported property type '" + type + "'");
    if (!in.read(reinterpret_cast<char*>(buf), size))
        throw IoError(path + ": unexpected end of binary payload at offset " +
                      std::to_string(static_cast<long long>(in.tellg())));
    auto as = [&](auto value) {
        std::memcpy(&value, buf, sizeof(value));
        return static_cast<double>(value);
    };
    if (type == "char" || type == "int8") return as(int8_t{});
    if (type == "uchar" || type == "uint8") return as(uint8_t{});
    if (type == "short" || type == "int16") return as(int16_t{});
    if (type == "ushort" || type == "uint16") return as(uint16_t{});
    if (type == "int" || type == "int32") return as(int32_t{});
    if (type == "uint" || type == "uint32") return as(uint32_t{});
    if (type == "float" || type == "float32") return as(float{});
    return as(double{});
}

struct PlyProperty {
    std::string name;
    std::string type;
    bool is_list = false;
    std::string count_type;
};

struct PlyElement {
    std::string name;
    size_t count = 0;
    std::vector<PlyProperty> props;
};

inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

/// Blue-to-red ramp used when a scalar channel is written as OBJ vertex
/// colors; t is the scalar normalized to [0, 1].
inline Vec3 colormap(double t) {
    t = std::clamp(t, 0.0, 1.0);
    const double r = std::clamp(1.5 - std::abs(4.0 * t - 3.0), 0.0, 1.0);
    const double g = std::clamp(1.5 - std::abs(4.0 * t - 2.0), 0.0, 1.0);
    const double b = std::clamp(1.5 - std::abs(4.0 * t - 1.0), 0.0, 1.0);
    return {r, g, b};
}

}  // namespace io_detail

/// Reads an OBJ (v/f records) or PLY (ascii or binary little-endian) file.
/// Vertex order is preserved. Meshes get their edges from the faces; point
/// clouds fall back to symmetric kNN connectivity with `knn_k` neighbors.
inline Surface load_surface(const std::string& path, int knn_k = 6) {
    const std::string ext = io_detail::lower_ext(path);
    std::vector<Vec3> points;
    std::vector<std::array<int, 3>> faces;

    if (ext == "obj") {
        std::ifstream in(path);
        if (!in) throw IoError("cannot open '" + path + "'");
        std::string line;
        size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            std::istringstream ls(line);
            std::string tag;
            if (!(ls >> tag) || tag[0] == '#') continue;
            if (tag == "v") {
                Vec3 p;
                if (!(ls >> p.x() >> p.y() >> p.z()))
                    io_detail::fail(path, lineno, "malformed vertex record");
                points.push_back(p);
            } else if (tag == "f") {
                std::vector<int> idx;
                std::string tok;
                while (ls >> tok) {
                    const size_t slash = tok.find('/');
                    int v = 0;
                    try {
                        v = std::stoi(tok.substr(0, slash));
                    } catch (const std::exception&) {
                        io_detail::fail(path, lineno, "malformed face index '" + tok + "'");
                    }
                    if (v < 1 || v > static_cast<int>(points.size()))
                        io_detail::fail(path, lineno, "face index out of range");
                    idx.push_back(v - 1);
                }
                if (idx.size() < 3)
                    io_detail::fail(path, lineno, "face needs at least 3 vertices");
                for (size_t t = 1; t + 1 < idx.size(); ++t)
                    faces.push_back({idx[0], idx[t], idx[t + 1]});
            }
        }
    } else if (ext == "ply") {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw IoError("cannot open '" + path + "'");
        std::string line;
        size_t lineno = 0;
        bool binary = false;
        std::vector<io_detail::PlyElement> elements;

        if (!std::getline(in, line) || line.substr(0, 3) != "ply")
            io_detail::fail(path, 1, "not a PLY file");
        ++lineno;
        while (std::getline(in, line)) {
            ++lineno;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            std::istringstream ls(line);
            std::string tag;
            ls >> tag;
            if (tag == "comment" || tag == "obj_info" || tag.empty()) continue;
            if (tag == "format") {
                std::string fmt;
                ls >> fmt;
                if (fmt == "ascii")
                    binary = false;
                else if (fmt == "binary_little_endian")
                    binary = true;
                else
                    io_detail::fail(path, lineno, "unsupported PLY format '" + fmt + "'");
            } else if (tag == "element") {
                io_detail::PlyElement el;
                if (!(ls >> el.name >> el.count))
                    io_detail::fail(path, lineno, "malformed element record");
                elements.push_back(el);
            } else if (tag == "property") {
                if (elements.empty())
                    io_detail::fail(path, lineno, "property before any element");
                io_detail::PlyProperty prop;
                std::string t;
                ls >> t;
                if (t == "list") {
                    prop.is_list = true;
                    if (!(ls >> prop.count_type >> prop.type >> prop.name))
                        io_detail::fail(path, lineno, "malformed list property");
                } else {
                    prop.type = t;
                    if (!(ls >> prop.name))
                        io_detail::fail(path, lineno, "malformed property record");
                }
                elements.back().props.push_back(prop);
            } else if (tag == "end_header") {
                break;
            } else {
                io_detail::fail(path, lineno, "unexpected header record '" + tag + "'");
            }
        }

        for (const auto& el : elements) {
            const bool is_vertex = el.name == "vertex";
            const bool is_face = el.name == "face";
            int ix = -1, iy = -1, iz = -1, ilist = -1;
            for (size_t p = 0; p < el.props.size(); ++p) {
                if (el.props[p].name == "x") ix = static_cast<int>(p);
                if (el.props[p].name == "y") iy = static_cast<int>(p);
                if (el.props[p].name == "z") iz = static_cast<int>(p);
                if (el.props[p].is_list &&
                    (el.props[p].name == "vertex_indices" || el.props[p].name == "vertex_index"))
                    ilist = static_cast<int>(p);
            }
            if (is_vertex && (ix < 0 || iy < 0 || iz < 0))
                throw IoError(path + ": vertex element lacks x/y/z properties");
            if (is_face && ilist < 0)
                throw IoError(path + ": face element lacks a vertex index list");

            std::vector<double> scalars(el.props.size());
            for (size_t e = 0; e < el.count; ++e) {
                std::vector<int> list;
                if (binary) {
                    for (size_t p = 0; p < el.props.size(); ++p) {
                        const auto& prop = el.props[p];
                        if (prop.is_list) {
                            const int cnt = static_cast<int>(
                                io_detail::ply_read_binary(in, prop.count_type, path));
                            for (int k = 0; k < cnt; ++k) {
                                const double v =
                                    io_detail::ply_read_binary(in, prop.type, path);
                                if (static_cast<int>(p) == ilist)
                                    list.push_back(static_cast<int>(v));
                            }
                        } else {
                            scalars[p] = io_detail::ply_read_binary(in, prop.type, path);
                        }
                    }
                } else {
                    ++lineno;
                    if (!std::getline(in, line))
                        io_detail::fail(path, lineno, "unexpected end of file");
                    std::istringstream ls(line);
                    for (size_t p = 0; p < el.props.size(); ++p) {
                        const auto& prop = el.props[p];
                        if (prop.is_list) {
                            int cnt = 0;
                            if (!(ls >> cnt))
                                io_detail::fail(path, lineno, "malformed list count");
                            for (int k = 0; k < cnt; ++k) {
                                double v;
                                if (!(ls >> v))
                                    io_detail::fail(path, lineno, "malformed list entry");
                                if (static_cast<int>(p) == ilist)
                                    list.push_back(static_cast<int>(v));
                            }
                        } else if (!(ls >> scalars[p])) {
                            io_detail::fail(path, lineno, "malformed property value");
                        }
                    }
                }
                if (is_vertex) points.emplace_back(scalars[ix], scalars[iy], scalars[iz]);
                if (is_face) {
                    if (list.size() < 3)
                        throw IoError(path + ": face with fewer than 3 vertices");
                    for (int v : list)
                        if (v < 0 || v >= static_cast<int>(points.size()))
                            throw IoError(path + ": face index out of range");
                    for (size_t t = 1; t + 1 < list.size(); ++t)
                        faces.push_back({list[0], list[t], list[t + 1]});
                }
            }
        }
    } else {
        throw IoError("unsupported mesh format '." + ext + "' (expected .obj or .ply)");
    }

    if (points.empty()) throw IoError(path + ": no vertices found");
    return make_surface(std::move(points), std::move(faces), knn_k);
}

struct SaveOptions {
    bool binary_ply = false;
};

/// Writes OBJ or PLY by extension, at full double precision. An optional
/// per-vertex scalar is stored as the PLY `quality` property, or as OBJ
/// vertex colors through a blue-to-red ramp normalized by the scalar maximum.
inline void save_surface(const Surface& surface, const std::string& path,
                         const std::vector<double>& per_vertex_scalar = {},
                         const SaveOptions& opts = {}) {
    if (!per_vertex_scalar.empty() &&
        per_vertex_scalar.size() != surface.points.size())
        throw ConfigError("save_surface: scalar channel length mismatch");

    const std::string ext = io_detail::lower_ext(path);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");

    if (ext == "obj") {
        double max_scalar = 0.0;
        for (double v : per_vertex_scalar) max_scalar = std::max(max_scalar, v);
        for (size_t i = 0; i < surface.points.size(); ++i) {
            const Vec3& p = surface.points[i];
            out << "v " << io_detail::fmt_double(p.x()) << ' '
                << io_detail::fmt_double(p.y()) << ' ' << io_detail::fmt_double(p.z());
            if (!per_vertex_scalar.empty()) {
                const Vec3 rgb = io_detail::colormap(
                    max_scalar > 0.0 ? per_vertex_scalar[i] / max_scalar : 0.0);
                out << ' ' << io_detail::fmt_double(rgb.x()) << ' '
                    << io_detail::fmt_double(rgb.y()) << ' '
                    << io_detail::fmt_double(rgb.z());
            }
            out << '\n';
        }
        for (const auto& f : surface.faces)
            out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
    } else if (ext == "ply") {
        out << "ply\nformat " << (opts.binary_ply ? "binary_little_endian" : "ascii")
            << " 1.0\n";
        out << "element vertex " << surface.points.size() << "\n";
        out << "property double x\nproperty double y\nproperty double z\n";
        if (!per_vertex_scalar.empty()) out << "property double quality\n";
        out << "element face " << surface.faces.size() << "\n";
        out << "property list uchar int vertex_indices\n";
        out << "end_header\n";
        if (opts.binary_ply) {
            auto put = [&](double v) { out.write(reinterpret_cast<const char*>(&v), 8); };
            for (size_t i = 0; i < surface.points.size(); ++i) {
                put(surface.points[i].x());
                put(surface.points[i].y());
                put(surface.points[i].z());
                if (!per_vertex_scalar.empty()) put(per_vertex_scalar[i]);
            }
            for (const auto& f : surface.faces) {
                const uint8_t cnt = 3;
                out.write(reinterpret_cast<const char*>(&cnt), 1);
                for (int c = 0; c < 3; ++c) {
                    const int32_t v = f[c];
                    out.write(reinterpret_cast<const char*>(&v), 4);
                }
            }
        } else {
            for (size_t i = 0; i < surface.points.size(); ++i) {
                const Vec3& p = surface.points[i];
                out << io_detail::fmt_double(p.x()) << ' ' << io_detail::fmt_double(p.y())
                    << ' ' << io_detail::fmt_double(p.z());
                if (!per_vertex_scalar.empty())
                    out << ' ' << io_detail::fmt_double(per_vertex_scalar[i]);
                out << '\n';
            }
            for (const auto& f : surface.faces)
                out << "3 " << f[0] << ' ' << f[1] << ' ' << f[2] << '\n';
        }
    } else {
        throw IoError("unsupported mesh format '." + ext + "' (expected .obj or .ply)");
    }
    if (!out) throw IoError("write to '" + path + "' failed");
}

}  // namespace nrr
