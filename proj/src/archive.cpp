#include "emucal/archive.hpp"

#include <array>
#include <cstdio>
#include <map>

#include <openssl/evp.h>

#include "emucal/csv.hpp"
#include "emucal/errors.hpp"
#include "json.hpp"

namespace emucal::archive {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

std::string site_prefix(std::size_t s) { return "site" + std::to_string(s + 1); }

std::vector<std::string> numbered(const std::string& stem, Index n) {
  std::vector<std::string> out;
  for (Index i = 1; i <= n; ++i) out.push_back(stem + std::to_string(i));
  return out;
}

std::string format_mean(const MeanSweep& m) {
  std::string out = "component,index,value\n";
  for (Index i = 0; i < m.row_means.size(); ++i)
    out += "row," + std::to_string(i) + "," + csv::format_double(m.row_means(i)) + "\n";
  for (Index j = 0; j < m.col_means.size(); ++j)
    out += "col," + std::to_string(j) + "," + csv::format_double(m.col_means(j)) + "\n";
  out += "overall,0," + csv::format_double(m.overall) + "\n";
  return out;
}

MeanSweep parse_mean(const std::string& text) {
  const auto table = csv::parse(text);
  if (table.header != std::vector<std::string>{"component", "index", "value"}) throw ParseError("mean sweep header");
  std::vector<double> rows, cols;
  MeanSweep m;
  bool have_overall = false;
  for (const auto& r : table.rows) {
    const double v = csv::parse_double(r[2]);
    if (r[0] == "row") rows.push_back(v);
    else if (r[0] == "col") cols.push_back(v);
    else if (r[0] == "overall") { m.overall = v; have_overall = true; }
    else throw ParseError("unknown mean sweep component " + r[0]);
  }
  if (!have_overall) throw ParseError("mean sweep lacks overall mean");
  m.row_means = Eigen::Map<Eigen::VectorXd>(rows.data(), static_cast<Index>(rows.size()));
  m.col_means = Eigen::Map<Eigen::VectorXd>(cols.data(), static_cast<Index>(cols.size()));
  return m;
}

std::vector<std::string> model_header(const SiteEmulator& site) {
  std::vector<std::string> header{"i", "s"};
  header.insert(header.end(), site.labels.begin(), site.labels.end());
  return header;
}

std::vector<std::string> model_row_labels(std::size_t s, Index r) {
  std::vector<std::string> labels;
  for (Index i = 0; i < r; ++i) labels.push_back(std::to_string(i + 1) + "," + std::to_string(s + 1));
  return labels;
}

Eigen::MatrixXd read_matrix_file(const fs::path& path, Index label_columns = 0) {
  return csv::to_matrix(csv::read(path), label_columns);
}

}  // namespace

std::string sha256_hex(const std::string& bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int length = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest.data(), &length, EVP_sha256(), nullptr) != 1)
    throw IoError("sha256 failed");
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < length; ++i) {
    std::snprintf(buf, sizeof(buf), "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

std::vector<NamedText> serialize_artifacts(const std::vector<SiteBasis>& bases, const EmulatorModel& model,
                                           const std::vector<MeanSweep>& means) {
  std::vector<NamedText> files;
  for (std::size_t s = 0; s < bases.size(); ++s) {
    const auto& b = bases[s];
    const std::string p = site_prefix(s);
    files.emplace_back("basis/" + p + "_U.csv", csv::format_matrix(b.U, numbered("u", b.rank())));
    files.emplace_back("basis/" + p + "_s.csv", csv::format_matrix(b.s, {"s"}));
    files.emplace_back("basis/" + p + "_V.csv", csv::format_matrix(b.V, numbered("v", b.rank())));
    files.emplace_back("basis/" + p + "_mean.csv", format_mean(means.at(s)));

    const auto& emu = model.sites.at(s);
    const Index r = static_cast<Index>(emu.models.size());
    const Index cols = static_cast<Index>(emu.labels.size());
    Eigen::MatrixXd bits(r, cols), fit(r, 3);
    for (Index i = 0; i < r; ++i) {
      for (Index j = 0; j < cols; ++j) bits(i, j) = emu.models[i].selected[j] ? 1.0 : 0.0;
      fit(i, 0) = emu.models[i].rss;
      fit(i, 1) = emu.models[i].residual_variance;
      fit(i, 2) = emu.models[i].aic;
    }
    const auto labels = model_row_labels(s, r);
    files.emplace_back("model/" + p + "_selection.csv", csv::format_matrix(bits, model_header(emu), labels));
    files.emplace_back("model/" + p + "_coefficients.csv", csv::format_matrix(emu.B, model_header(emu), labels));
    files.emplace_back("model/" + p + "_fit.csv",
                       csv::format_matrix(fit, {"i", "s", "rss", "residual_variance", "aic"}, labels));
  }
  return files;
}

void write_artifacts(const fs::path& dir, const EmulatorArtifacts& a) {
  for (const auto& [name, content] : serialize_artifacts(a.bases, a.model, a.means)) csv::write_text(dir / name, content);
  std::string layout = "site,number,begin,rows\n";
  for (const auto& b : a.blocks)
    layout += std::to_string(b.site) + "," + std::to_string(a.space.sites().at(b.site).number) + "," +
              std::to_string(b.begin) + "," + std::to_string(b.rows) + "\n";
  csv::write_text(dir / "layout.csv", layout);
  csv::write_text(dir / "pipeline_hash.txt", a.hash + "\n");
}

EmulatorArtifacts read_artifacts(const fs::path& dir, const ParameterSpace& space) {
  EmulatorArtifacts a;
  a.space = space;
  const auto layout = csv::read(dir / "layout.csv");
  for (const auto& r : layout.rows)
    a.blocks.push_back({std::stoi(r[0]), static_cast<Index>(std::stol(r[2])), static_cast<Index>(std::stol(r[3]))});
  if (static_cast<Index>(a.blocks.size()) != space.n_sites())
    throw ArtifactMismatch("artifact layout has " + std::to_string(a.blocks.size()) + " sites, configuration has " +
                           std::to_string(space.n_sites()));

  for (std::size_t s = 0; s < a.blocks.size(); ++s) {
    const std::string p = site_prefix(s);
    SiteBasis b;
    b.U = read_matrix_file(dir / "basis" / (p + "_U.csv"));
    b.s = read_matrix_file(dir / "basis" / (p + "_s.csv")).col(0);
    b.V = read_matrix_file(dir / "basis" / (p + "_V.csv"));
    a.bases.push_back(std::move(b));
    a.means.push_back(parse_mean(csv::read_text(dir / "basis" / (p + "_mean.csv"))));

    const auto selection = csv::read(dir / "model" / (p + "_selection.csv"));
    const auto coefficients = csv::read(dir / "model" / (p + "_coefficients.csv"));
    const Eigen::MatrixXd fit = read_matrix_file(dir / "model" / (p + "_fit.csv"), 2);
    if (selection.header != coefficients.header) throw ArtifactMismatch("selection and coefficient headers differ");
    SiteEmulator emu;
    emu.labels.assign(selection.header.begin() + 2, selection.header.end());
    for (std::size_t j = 1; j < emu.labels.size(); ++j) {
      const auto idx = space.find(emu.labels[j]);
      if (!idx) throw ArtifactMismatch("model column " + emu.labels[j] + " is not a configured parameter");
      emu.parameters.push_back(*idx);
    }
    const Eigen::MatrixXd bits = csv::to_matrix(selection, 2);
    const Eigen::MatrixXd coef = csv::to_matrix(coefficients, 2);
    if (fit.rows() != bits.rows() || coef.rows() != bits.rows()) throw ArtifactMismatch("model row counts differ");
    for (Index i = 0; i < bits.rows(); ++i) {
      SingularValueModel m;
      m.coefficients = coef.row(i).transpose();
      for (Index j = 0; j < bits.cols(); ++j) {
        m.selected.push_back(bits(i, j) != 0.0);
        if (!m.selected.back() && m.coefficients(j) != 0.0)
          throw ArtifactMismatch("nonzero coefficient on an unselected column");
      }
      m.rss = fit(i, 0);
      m.residual_variance = fit(i, 1);
      m.aic = fit(i, 2);
      emu.models.push_back(std::move(m));
    }
    assemble_coefficients(emu);
    a.model.sites.push_back(std::move(emu));
  }
  std::string recorded = csv::read_text(dir / "pipeline_hash.txt");
  while (!recorded.empty() && (recorded.back() == '\n' || recorded.back() == '\r')) recorded.pop_back();
  a.hash = recorded;
  a.verify();
  return a;
}

std::string format_sensitivity(const SensitivityMatrix& H, const std::vector<Site>& sites) {
  std::vector<std::string> header{"site", "obs"};
  for (Index r = 1; r <= H.values.cols(); ++r) header.push_back("R" + std::to_string(r));
  std::vector<std::string> labels;
  for (const auto& b : H.blocks)
    for (Index o = 0; o < b.rows; ++o) labels.push_back(std::to_string(sites.at(b.site).number) + "," + std::to_string(o + 1));
  return csv::format_matrix(H.values, header, labels);
}

SensitivityMatrix parse_sensitivity(const std::string& text, const std::vector<Site>& sites) {
  const auto table = csv::parse(text);
  if (table.header.size() < 3 || table.header[0] != "site" || table.header[1] != "obs")
    throw ParseError("sensitivity header must start with site,obs");
  SensitivityMatrix H;
  H.values = csv::to_matrix(table, 2);
  Index row = 0;
  for (int s = 0; s < static_cast<int>(sites.size()); ++s) {
    const Index begin = row;
    while (row < static_cast<Index>(table.rows.size()) && table.rows[row][0] == std::to_string(sites[s].number)) ++row;
    if (row - begin != sites[s].n_obs)
      throw ParseError("site " + std::to_string(sites[s].number) + " has " + std::to_string(row - begin) +
                       " rows, expected " + std::to_string(sites[s].n_obs));
    H.blocks.push_back({s, begin, row - begin});
  }
  if (row != H.values.rows()) throw ParseError("unexpected rows after the last site");
  if (!H.values.allFinite() || (H.values.array() < 0.0).any()) throw InvariantViolation("sensitivities must be finite and non-negative");
  return H;
}

void write_h_archive(const fs::path& dir, const std::vector<SensitivityMatrix>& runs, const DesignMatrix& design,
                     const Domain& domain) {
  if (static_cast<Index>(runs.size()) != design.rows.rows()) throw DimensionMismatch("one H per design row");
  ordered_json manifest;
  manifest["n_regions"] = domain.n_regions();
  manifest["sites"] = ordered_json::array();
  for (const auto& s : domain.sites) manifest["sites"].push_back({{"number", s.number}, {"code", s.code}, {"n_obs", s.n_obs}});
  manifest["runs"] = ordered_json::array();
  for (std::size_t p = 0; p < runs.size(); ++p) {
    char name[32];
    std::snprintf(name, sizeof(name), "H_%03zu.csv", p);
    csv::write_text(dir / name, format_sensitivity(runs[p], domain.sites));
    ordered_json theta = ordered_json::object();
    for (std::size_t j = 0; j < design.columns.size(); ++j) theta[design.columns[j]] = design.rows(static_cast<Index>(p), static_cast<Index>(j));
    manifest["runs"].push_back({{"run_index", p}, {"theta", theta}, {"path", name}});
  }
  csv::write_text(dir / "manifest.json", manifest.dump(2) + "\n");
}

HArchive read_h_archive(const fs::path& dir, const ParameterSpace& space) {
  ordered_json manifest;
  try {
    manifest = ordered_json::parse(csv::read_text(dir / "manifest.json"));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("manifest: ") + e.what());
  }
  HArchive out;
  out.design.columns = space.column_names();
  const auto& runs = manifest.at("runs");
  out.design.rows.resize(static_cast<Index>(runs.size()), space.dimension());
  for (std::size_t p = 0; p < runs.size(); ++p) {
    const auto& run = runs[p];
    if (run.at("run_index").get<std::size_t>() != p) throw ParseError("manifest runs must be ordered by run_index");
    for (Index j = 0; j < space.dimension(); ++j) {
      const auto& name = out.design.columns[j];
      if (!run.at("theta").contains(name)) throw ParseError("manifest theta lacks " + name);
      out.design.rows(static_cast<Index>(p), j) = run.at("theta").at(name).get<double>();
    }
    SensitivityMatrix H = parse_sensitivity(csv::read_text(dir / run.at("path").get<std::string>()), space.sites());
    H.run_index = static_cast<int>(p);
    if (!out.runs.empty() && H.values.cols() != out.runs.front().values.cols())
      throw ArtifactMismatch("runs have different region counts");
    out.runs.push_back(std::move(H));
  }
  check_design(out.design, space);
  return out;
}

std::string format_singular_value_tables(const std::vector<Eigen::MatrixXd>& tables, const std::vector<Site>& sites) {
  std::vector<std::string> header{"p"};
  Index cols = 0;
  for (std::size_t s = 0; s < tables.size(); ++s) {
    for (Index i = 1; i <= tables[s].cols(); ++i)
      header.push_back("s" + std::to_string(sites.at(s).number) + "_" + std::to_string(i));
    cols += tables[s].cols();
  }
  const Index rows = tables.empty() ? 0 : tables.front().rows();
  Eigen::MatrixXd all(rows, cols);
  Index offset = 0;
  for (const auto& t : tables) {
    all.middleCols(offset, t.cols()) = t;
    offset += t.cols();
  }
  std::vector<std::string> labels;
  for (Index p = 0; p < rows; ++p) labels.push_back(std::to_string(p));
  return csv::format_matrix(all, header, labels);
}

std::string format_proportions(const EmulatorModel& model, const ParameterSpace& space,
                               const std::vector<Eigen::VectorXd>& weights) {
  std::vector<std::string> header{"site", "INT"};
  for (const auto& spec : space.invariant_specs()) header.push_back(spec.name);
  for (const auto& t : space.site_templates()) header.push_back(t.name + "_s");
  std::string out = csv::join(header) + "\n";
  for (std::size_t s = 0; s < model.sites.size(); ++s) {
    const auto props = selection_proportions(model.sites[s], weights.empty() ? Eigen::VectorXd{} : weights.at(s));
    out += std::to_string(space.sites().at(s).number);
    for (Index j = 0; j < props.proportions.size(); ++j) out += "," + csv::format_double(props.proportions(j));
    out += "\n";
  }
  return out;
}

}  // namespace emucal::archive
