#include <catch2/catch.hpp>

#include <filesystem>
#include <fstream>
#include <random>

#include "helpers.hpp"

using namespace nrr;

namespace {

std::filesystem::path tmp_dir() {
    const auto dir = std::filesystem::temp_directory_path() / "nrr_io_tests";
    std::filesystem::create_directories(dir);
    return dir;
}

std::string write_text(const std::string& name, const std::string& content) {
    const auto path = tmp_dir() / name;
    std::ofstream out(path);
    out << content;
    return path.string();
}

Surface random_mesh(uint64_t seed) {
    std::mt19937_64 rng(seed);
    Surface strip = test_helpers::make_strip(7, 4);
    std::uniform_real_distribution<double> jitter(-0.2, 0.2);
    for (auto& p : strip.points)
        p += Vec3(jitter(rng), jitter(rng), jitter(rng));  // irrational-ish coords
    strip.finalize_edges();
    return strip;
}

}  // namespace

TEST_CASE("obj: minimal triangle") {
    const auto path = write_text("tri.obj",
                                 "# comment\n"
                                 "v 0 0 0\n"
                                 "v 1 0 0\n"
                                 "v 0 1 0\n"
                                 "f 1 2 3\n");
    const Surface s = load_surface(path);
    CHECK(s.point_count() == 3);
    CHECK(s.faces.size() == 1);
    CHECK(s.edges.size() == 3);
}

TEST_CASE("obj: face records with texture and normal indices, fan triangulation") {
    const auto path = write_text("quad.obj",
                                 "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\n"
                                 "f 1/1 2/2/2 3//3 4\n");
    const Surface s = load_surface(path);
    CHECK(s.point_count() == 4);
    REQUIRE(s.faces.size() == 2);
    CHECK(s.faces[0] == std::array<int, 3>{0, 1, 2});
    CHECK(s.faces[1] == std::array<int, 3>{0, 2, 3});
}

TEST_CASE("obj: malformed records report the line") {
    const auto bad_vertex = write_text("bad_v.obj", "v 0 0 0\nv 1 2\n");
    CHECK_THROWS_WITH(load_surface(bad_vertex), Catch::Contains(":2:"));

    const auto bad_face = write_text("bad_f.obj", "v 0 0 0\nv 1 0 0\nf 1 2 5\n");
    CHECK_THROWS_WITH(load_surface(bad_face), Catch::Contains("out of range"));

    const auto bad_token = write_text("bad_t.obj", "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 x 3\n");
    CHECK_THROWS_WITH(load_surface(bad_token), Catch::Contains(":4:"));
}

TEST_CASE("ply: ascii point cloud falls back to knn connectivity") {
    std::string body = "ply\nformat ascii 1.0\nelement vertex 10\n"
                       "property float x\nproperty float y\nproperty float z\n"
                       "end_header\n";
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    for (int i = 0; i < 10; ++i)
        body += std::to_string(uni(rng)) + " " + std::to_string(uni(rng)) + " " +
                std::to_string(uni(rng)) + "\n";
    const Surface s = load_surface(write_text("cloud.ply", body));
    CHECK(s.point_count() == 10);
    CHECK(s.faces.empty());
    CHECK_FALSE(s.edges.empty());
    std::vector<int> degree(10, 0);
    for (const auto& [a, b] : s.edges) {
        ++degree[a];
        ++degree[b];
    }
    for (int d : degree) CHECK(d >= 6);
}

TEST_CASE("ply: skips unknown vertex properties") {
    const std::string body = "ply\nformat ascii 1.0\nelement vertex 2\n"
                             "property float x\nproperty float y\nproperty float z\n"
                             "property float confidence\n"
                             "end_header\n"
                             "1 2 3 0.5\n4 5 6 0.25\n";
    const Surface s = load_surface(write_text("extra.ply", body), 1);
    REQUIRE(s.point_count() == 2);
    CHECK(s.points[0] == Vec3(1, 2, 3));
    CHECK(s.points[1] == Vec3(4, 5, 6));
}

TEST_CASE("obj round trip preserves coordinates exactly") {
    const Surface mesh = random_mesh(11);
    const auto path = (tmp_dir() / "rt.obj").string();
    save_surface(mesh, path);
    const Surface back = load_surface(path);
    REQUIRE(back.point_count() == mesh.point_count());
    REQUIRE(back.faces == mesh.faces);
    for (int i = 0; i < mesh.point_count(); ++i)
        CHECK(back.points[i] == mesh.points[i]);  // bitwise, via %.17g
}

TEST_CASE("ply round trips preserve coordinates exactly in both formats") {
    const Surface mesh = random_mesh(12);
    for (bool binary : {false, true}) {
        const auto path = (tmp_dir() / (binary ? "rt_b.ply" : "rt_a.ply")).string();
        save_surface(mesh, path, {}, {binary});
        const Surface back = load_surface(path);
        REQUIRE(back.point_count() == mesh.point_count());
        REQUIRE(back.faces == mesh.faces);
        for (int i = 0; i < mesh.point_count(); ++i)
            CHECK(back.points[i] == mesh.points[i]);
    }
}

TEST_CASE("ply: scalar channel becomes a quality property that survives reload") {
    const Surface mesh = random_mesh(13);
    std::vector<double> quality(mesh.point_count());
    for (int i = 0; i < mesh.point_count(); ++i) quality[i] = 0.01 * i;
    const auto path = (tmp_dir() / "quality.ply").string();
    save_surface(mesh, path, quality);

    std::ifstream in(path);
    std::string content((std::istreambuf_iterator<char>(in)),
                        std::istreambuf_iterator<char>());
    CHECK(content.find("property double quality") != std::string::npos);

    const Surface back = load_surface(path);  // quality is skipped on load
    CHECK(back.point_count() == mesh.point_count());
}

TEST_CASE("obj: scalar channel writes vertex colors") {
    const Surface mesh = random_mesh(14);
    std::vector<double> err(mesh.point_count(), 0.0);
    err.back() = 1.0;
    const auto path = (tmp_dir() / "colored.obj").string();
    save_surface(mesh, path, err);

    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    std::istringstream ls(line);
    std::string tag;
    double v;
    int count = 0;
    ls >> tag;
    while (ls >> v) ++count;
    CHECK(count == 6);  // xyz + rgb
}

TEST_CASE("save: scalar channel length mismatch is an error") {
    const Surface mesh = random_mesh(15);
    CHECK_THROWS_AS(save_surface(mesh, (tmp_dir() / "bad.ply").string(), {1.0, 2.0}),
                    ConfigError);
}

TEST_CASE("io: unsupported extensions and missing files") {
    CHECK_THROWS_AS(load_surface((tmp_dir() / "mesh.stl").string()), IoError);
    CHECK_THROWS_AS(load_surface((tmp_dir() / "does_not_exist.obj").string()), IoError);
    const Surface mesh = random_mesh(16);
    CHECK_THROWS_AS(save_surface(mesh, (tmp_dir() / "mesh.stl").string()), IoError);
}

TEST_CASE("ply: binary with mixed property types") {
    // float coordinates and a uchar-counted int list, written by hand
    const auto path = (tmp_dir() / "mixed.ply").string();
    {
        std::ofstream out(path, std::ios::binary);
        out << "ply\nformat binary_little_endian 1.0\n"
            << "element vertex 3\n"
            << "property float x\nproperty float y\nproperty float z\n"
            << "element face 1\nproperty list uchar int vertex_indices\nend_header\n";
        const float coords[9] = {0.f, 0.f, 0.f, 1.f, 0.f, 0.f, 0.f, 1.f, 0.f};
        out.write(reinterpret_cast<const char*>(coords), sizeof(coords));
        const uint8_t cnt = 3;
        const int32_t idx[3] = {0, 1, 2};
        out.write(reinterpret_cast<const char*>(&cnt), 1);
        out.write(reinterpret_cast<const char*>(idx), sizeof(idx));
    }
    const Surface s = load_surface(path);
    CHECK(s.point_count() == 3);
    REQUIRE(s.faces.size() == 1);
    CHECK(s.faces[0] == std::array<int, 3>{0, 1, 2});
}

TEST_CASE("ply: big-endian payloads are rejected") {
    const auto path = write_text("be.ply",
                                 "ply\nformat binary_big_endian 1.0\n"
                                 "element vertex 0\nend_header\n");
    CHECK_THROWS_WITH(load_surface(path), Catch::Contains("unsupported PLY format"));
}

TEST_CASE("ply: carriage returns in the header are tolerated") {
    const auto path = write_text("crlf.ply",
                                 "ply\r\nformat ascii 1.0\r\nelement vertex 1\r\n"
                                 "property float x\r\nproperty float y\r\n"
                                 "property float z\r\nend_header\r\n1 2 3\r\n");
    const Surface s = load_surface(path, 1);
    REQUIRE(s.point_count() == 1);
    CHECK(s.points[0] == Vec3(1, 2, 3));
}

TEST_CASE("ply: truncated binary payload reports the offset") {
    const auto path = (tmp_dir() / "trunc.ply").string();
    {
        std::ofstream out(path, std::ios::binary);
        out << "ply\nformat binary_little_endian 1.0\n"
            << "element vertex 2\n"
            << "property double x\nproperty double y\nproperty double z\n"
            << "end_header\n";
        const double one = 1.0;
        out.write(reinterpret_cast<const char*>(&one), 8);  // far too short
    }
    CHECK_THROWS_WITH(load_surface(path), Catch::Contains("offset"));
}
