#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include "spherevortex/equilibria.hpp"
#include "spherevortex/io.hpp"
#include "spherevortex/manifest.hpp"
#include "spherevortex/random.hpp"

using namespace spherevortex;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("spherevortex_io_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string l; std::getline(ss, l);) out.push_back(l);
  return out;
}

std::string message_of(const std::string& text) {
  try {
    io::parse_config(text);
  } catch (const ValidationError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Format, SeventeenDigitScientificAndRoundTrip) {
  EXPECT_EQ(io::fmt(1.0), "1.0000000000000000e+00");
  EXPECT_EQ(io::fmt(-0.5), "-5.0000000000000000e-01");
  EXPECT_EQ(io::fmt(std::numeric_limits<double>::quiet_NaN()), "nan");
  EXPECT_EQ(io::fmt(-std::numeric_limits<double>::infinity()), "-inf");
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int k = 0; k < 2000; ++k) {
    const double x = u(gen) * std::pow(10.0, static_cast<int>(gen() % 40) - 20);
    EXPECT_EQ(std::strtod(io::fmt(x).c_str(), nullptr), x);
  }
}

TEST(Config, PolarPairRoundTrip) {
  const VortexConfig pp = polar_pair(1.5, 0.25);
  const io::RunConfig rc = io::parse_config(io::config_to_json(pp));
  EXPECT_TRUE(rc.warnings.empty());
  EXPECT_FALSE(rc.blob.has_value());
  ASSERT_EQ(rc.config.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(rc.config.points[i], pp.points[i]);
    EXPECT_EQ(rc.config.strengths[i], pp.strengths[i]);
  }
  EXPECT_EQ(rc.config.gamma, 0.25);
  EXPECT_TRUE(rc.config.strict_gauss);
}

TEST(Config, RandomConfigsRoundTripBitExactly) {
  RngStream rng = make_stream(9);
  for (int k = 0; k < 20; ++k) {
    const VortexConfig c = random_gauss_config(rng, 3 + k % 4, 0.1 * k);
    const io::RunConfig rc = io::parse_config(io::config_to_json(c, io::BlobRequest{0.05, 7, 0.3}));
    for (std::size_t i = 0; i < c.size(); ++i) {
      EXPECT_EQ(rc.config.points[i].vec(), c.points[i].vec());
      EXPECT_EQ(rc.config.strengths[i], c.strengths[i]);
    }
    ASSERT_TRUE(rc.blob.has_value());
    EXPECT_EQ(rc.blob->eps, 0.05);
    EXPECT_EQ(rc.blob->particles_per_blob, 7);
    EXPECT_EQ(rc.blob->beta, 0.3);
  }
}

TEST(Config, GaussViolationNamesTheSum) {
  const std::string doc = R"({"vortices": [{"position": [0,0,1], "strength": 1}, {"position": [0,0,-1], "strength": -0.5}]})";
  const std::string msg = message_of(doc);
  EXPECT_NE(msg.find("sum of strengths = 0.5"), std::string::npos) << msg;
  const std::string relaxed =
      R"({"strict_gauss": false, "vortices": [{"position": [0,0,1], "strength": 1}, {"position": [0,0,-1], "strength": -0.5}]})";
  EXPECT_NO_THROW(io::parse_config(relaxed));
}

TEST(Config, OffSpherePositionIsRenormalizedWithWarning) {
  const std::string doc = R"({"vortices": [{"position": [0,0,1.01], "strength": 1}, {"position": [0,0,-1], "strength": -1}]})";
  const io::RunConfig rc = io::parse_config(doc);
  ASSERT_EQ(rc.warnings.size(), 1u);
  EXPECT_NE(rc.warnings[0].find("vortices[0].position"), std::string::npos);
  EXPECT_EQ(rc.config.points[0].vec(), e3());
  const std::string tiny = R"({"vortices": [{"position": [0,0,1.0000001], "strength": 1}, {"position": [0,0,-1], "strength": -1}]})";
  EXPECT_TRUE(io::parse_config(tiny).warnings.empty());
}

TEST(Config, SchemaErrorsNameThePath) {
  const std::string ok_tail = R"(, {"position": [0,0,-1], "strength": -1}])";
  EXPECT_NE(message_of(R"({"vortices": [{"position": [0,0], "strength": 1})" + ok_tail + "}").find("vortices[0].position"),
            std::string::npos);
  EXPECT_NE(message_of(R"({"vortices": [{"position": [0,0,1], "strength": "one"})" + ok_tail + "}").find("vortices[0].strength"),
            std::string::npos);
  EXPECT_NE(message_of(R"({"vortices": [{"position": [0,"z",1], "strength": 1})" + ok_tail + "}").find("vortices[0].position[1]"),
            std::string::npos);
  EXPECT_NE(message_of(R"({"vortices": [{"strength": 1})" + ok_tail + "}").find("vortices[0].position: missing"), std::string::npos);
  EXPECT_NE(message_of(R"({"gamma": "fast", "vortices": []})").find("gamma"), std::string::npos);
  EXPECT_NE(message_of(R"({"vortices": [], "speed": 1})").find("speed: unknown field"), std::string::npos);
  EXPECT_NE(message_of(R"({"vortices": {}})").find("vortices: expected a list"), std::string::npos);
  EXPECT_NE(message_of(R"({"gamma": 0})").find("vortices: missing"), std::string::npos);
  EXPECT_NE(message_of(R"({"vortices": [{"position": [0,0,1], "strength": 1})" + ok_tail + R"(, "blob": {"eps": 2}})")
                .find("blob.eps"),
            std::string::npos);
  EXPECT_NE(message_of("[1, 2").find("config"), std::string::npos);
}

TEST(Config, ReadFromFile) {
  const fs::path dir = scratch_dir("read");
  std::ofstream(dir / "c.json") << io::config_to_json(four_vortex(0.6, 0.3));
  const io::RunConfig rc = io::read_config(dir / "c.json");
  EXPECT_EQ(rc.config.size(), 4u);
  EXPECT_LE(max_speed(vortex_rhs(rc.config)), 1e-10);
  EXPECT_THROW(io::read_config(dir / "missing.json"), ValidationError);
}

TEST(Csv, TrajectoryAndInvariantSchemas) {
  const fs::path dir = scratch_dir("traj");
  const VortexConfig pp = polar_pair(1.0, 0.5);
  const Trajectory tr = integrate(pp, 1e-2, 0.05, 1);
  io::write_trajectory(dir / "trajectory.csv", pp, tr);
  io::write_invariants(dir / "invariants.csv", tr);
  io::write_drift(dir / "drift.csv", tr);
  const auto t = lines(slurp(dir / "trajectory.csv"));
  ASSERT_EQ(t.size(), 1u + 2u * tr.size());
  EXPECT_EQ(t[0], "t,i,x,y,z,gx,gy,gz");
  EXPECT_EQ(t[1], "0.0000000000000000e+00,1,0.0000000000000000e+00,0.0000000000000000e+00,1.0000000000000000e+00,"
                  "0.0000000000000000e+00,0.0000000000000000e+00,0.0000000000000000e+00");
  EXPECT_EQ(lines(slurp(dir / "invariants.csv"))[0], "t,H,M3,gauss_sum");
  const auto d = lines(slurp(dir / "drift.csv"));
  EXPECT_EQ(d[0], "t,dH,dM3,dM,dgauss");
  EXPECT_EQ(slurp(dir / "drift.csv").find('\r'), std::string::npos);
}

TEST(Csv, SpectrumSummaryRoundTrip) {
  const fs::path dir = scratch_dir("spec");
  const SpectrumReport rep = spectrum(jacobian(four_vortex(1.0, 0.5)).assembled);
  io::write_spectrum(dir / "spectrum.csv", rep, 0.0);
  const auto l = lines(slurp(dir / "spectrum.csv"));
  EXPECT_EQ(l[0], "re,im,residual");
  EXPECT_EQ(l.size(), 10u);
  EXPECT_EQ(l.back().rfind("# max_real_part=", 0), 0u);
  const auto [mrp, omega] = io::read_spectrum_summary(dir / "spectrum.csv");
  EXPECT_EQ(mrp, rep.max_real_part);
  EXPECT_EQ(omega, 0.0);
  EXPECT_NEAR(mrp, 0.0491, 1e-3);
}

TEST(Csv, OtherSchemas) {
  const fs::path dir = scratch_dir("other");
  SweepGrid g;
  g.a_values = {0.5};
  g.gamma_values = {0.0, 0.5};
  io::write_sweep(dir / "sweep.csv", stability_sweep(g));
  const auto s = lines(slurp(dir / "sweep.csv"));
  EXPECT_EQ(s[0], "family,N,a,kappa,gamma,eq_residual,max_real_part,Omega");
  EXPECT_EQ(s.size(), 3u);
  EXPECT_EQ(s[1].rfind("four-vortex,4,5.0000000000000000e-01,", 0), 0u);

  io::write_jacobian(dir / "jacobian.csv", jacobian(polar_pair(1.0, 0.0)));
  const auto j = lines(slurp(dir / "jacobian.csv"));
  EXPECT_EQ(j[0], "i,j,a11,a12,a21,a22");
  EXPECT_EQ(j.size(), 5u);

  CollisionStats st;
  st.eps_grid = {0.1};
  st.trials = 4;
  st.collided = {1};
  st.fraction = {0.25};
  st.std_error = {std::sqrt(0.25 * 0.75 / 4)};
  io::write_collisions(dir / "collisions.csv", st);
  const auto c = lines(slurp(dir / "collisions.csv"));
  EXPECT_EQ(c[0], "eps,trials,collided,fraction,stderr");
  EXPECT_EQ(c[1].substr(0, 30), "1.0000000000000001e-01,4,1,2.5");

  RngStream rng = make_stream(4);
  const BlobCloud cloud = blob_initialize(polar_pair(1.0, 0.0), 0.1, 5, 0.4, rng);
  BlobEvolveOptions opt;
  opt.dt = 1e-2;
  opt.t_end = 0.1;
  const MomentReport rep = blob_evolve(cloud, opt);
  io::write_moments(dir / "moments.csv", rep);
  io::write_exit(dir / "exit.csv", rep);
  EXPECT_EQ(lines(slurp(dir / "moments.csv"))[0], "t,blob,cx,cy,cz,I,R,dist_ref,m1,m2,m3,mass_out_eps,mass_out_epsbeta");
  const auto e = lines(slurp(dir / "exit.csv"));
  EXPECT_EQ(e[0], "blob,exit_time");
  EXPECT_EQ(e[1], "1,");
}

TEST(Manifest, DigestsAndTamperDetection) {
  const fs::path dir = scratch_dir("manifest");
  std::ofstream(dir / "a.csv", std::ios::binary) << "x\n1\n";
  std::ofstream(dir / "b.csv", std::ios::binary) << "";
  io::RunManifest m;
  m.command = "simulate";
  m.argv = {"simulate", "--config", "c.json"};
  m.params["dt"] = 0.001;
  m.master_seed = 42;
  io::write_manifest(dir, m, {"a.csv", "b.csv"});
  const io::RunManifest r = io::read_manifest(dir / "manifest.json");
  EXPECT_EQ(r.command, "simulate");
  EXPECT_EQ(r.argv, m.argv);
  EXPECT_EQ(r.master_seed, 42u);
  EXPECT_EQ(r.version, SPHEREVORTEX_VERSION);
  ASSERT_EQ(r.outputs.size(), 2u);
  // Empty-input SHA-256.
  EXPECT_EQ(r.outputs[1].sha256, "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_TRUE(io::check_manifest(dir / "manifest.json").empty());
  std::ofstream(dir / "a.csv", std::ios::binary) << "x\n2\n";
  const auto bad = io::check_manifest(dir / "manifest.json");
  ASSERT_EQ(bad.size(), 1u);
  EXPECT_EQ(bad[0].path, "a.csv");
  fs::remove(dir / "b.csv");
  EXPECT_EQ(io::check_manifest(dir / "manifest.json").size(), 2u);
  std::ofstream(dir / "broken.json") << "{\"command\": 1}";
  EXPECT_THROW(io::read_manifest(dir / "broken.json"), ValidationError);
}
