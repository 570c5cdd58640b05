#pragma once

#include "rompc/config.hpp"
#include "rompc/ssm.hpp"

#include <fstream>

namespace rompc {

namespace detail {

inline void write_matrix(std::ostream& out, const Matrix& M) {
    out << std::setprecision(17);
    for (int i = 0; i < M.rows(); ++i) {
        for (int j = 0; j < M.cols(); ++j) out << (j ? " " : "") << M(i, j);
        out << "\n";
    }
}

inline Matrix read_matrix(std::istream& in, int rows, int cols, const std::string& what) {
    Matrix M(rows, cols);
    for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < cols; ++j) {
            if (!(in >> M(i, j))) {
                throw std::runtime_error("rom file: truncated block " + what);
            }
        }
    }
    return M;
}

inline void expect_token(std::istream& in, const std::string& expected) {
    std::string token;
    if (!(in >> token) || token != expected) {
        throw std::runtime_error("rom file: expected `" + expected + "`, got `" + token + "`");
    }
}

}  // namespace detail

/// Versioned text serialization of a reduced-order model. Coefficient tables
/// are stored against the graded-lex monomial order of PolynomialMap.
inline void save_rom(const SsmRom& rom, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write rom file: " + path);
    out << "rompc-rom-v1\n";
    out << "dims " << rom.n << " " << rom.n_f << " " << rom.m << " " << rom.n_y << "\n";
    out << std::setprecision(17);
    out << "domain_radius " << rom.domain_radius << "\n";
    out << "reduced_blocks " << rom.reduced_blocks.size() << "\n";
    for (const auto& b : rom.reduced_blocks) {
        out << (b.kind == ModalBlock::Kind::ScalarReal ? "scalar " : "pair ") << b.decay << " "
            << b.frequency << "\n";
    }
    out << "A_r\n";
    detail::write_matrix(out, rom.A_r);
    out << "B_r\n";
    detail::write_matrix(out, rom.B_r);
    out << "B_n\n";
    detail::write_matrix(out, rom.B_n);
    out << "C\n";
    detail::write_matrix(out, rom.C);
    out << "w_nl " << rom.w_nl.basis().deg_min() << " " << rom.w_nl.basis().deg_max() << "\n";
    detail::write_matrix(out, rom.w_nl.coefficients());
    out << "r_nl " << rom.r_nl.basis().deg_min() << " " << rom.r_nl.basis().deg_max() << "\n";
    detail::write_matrix(out, rom.r_nl.coefficients());
    out << "constants " << rom.constants.L_fnl << " " << rom.constants.L_wnl << " "
        << rom.constants.L_rnl << " " << rom.constants.L_Cw << " " << rom.constants.lambda_An
        << " " << rom.constants.lambda_Ar << "\n";
}

inline SsmRom load_rom(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open rom file: " + path);
    std::string version;
    in >> version;
    if (version != "rompc-rom-v1") {
        throw std::runtime_error("rom file: unsupported version tag " + version);
    }
    SsmRom rom;
    detail::expect_token(in, "dims");
    in >> rom.n >> rom.n_f >> rom.m >> rom.n_y;
    detail::expect_token(in, "domain_radius");
    in >> rom.domain_radius;
    detail::expect_token(in, "reduced_blocks");
    int nblocks = 0;
    in >> nblocks;
    for (int i = 0; i < nblocks; ++i) {
        std::string kind;
        double decay = 0.0, freq = 0.0;
        in >> kind >> decay >> freq;
        rom.reduced_blocks.push_back(kind == "scalar" ? ModalBlock::scalar(decay)
                                                      : ModalBlock::pair(decay, freq));
    }
    detail::expect_token(in, "A_r");
    rom.A_r = detail::read_matrix(in, rom.n, rom.n, "A_r");
    detail::expect_token(in, "B_r");
    rom.B_r = detail::read_matrix(in, rom.n, rom.m, "B_r");
    detail::expect_token(in, "B_n");
    rom.B_n = detail::read_matrix(in, rom.n_f - rom.n, rom.m, "B_n");
    detail::expect_token(in, "C");
    rom.C = detail::read_matrix(in, rom.n_y, rom.n_f, "C");
    detail::expect_token(in, "w_nl");
    int dmin = 0, dmax = 0;
    in >> dmin >> dmax;
    rom.w_nl = PolynomialMap(rom.n, rom.n_f, dmin, dmax);
    rom.w_nl.set_coefficients(
        detail::read_matrix(in, rom.n_f, rom.w_nl.basis().size(), "w_nl"));
    detail::expect_token(in, "r_nl");
    in >> dmin >> dmax;
    rom.r_nl = PolynomialMap(rom.n, rom.n, dmin, dmax);
    rom.r_nl.set_coefficients(detail::read_matrix(in, rom.n, rom.r_nl.basis().size(), "r_nl"));
    detail::expect_token(in, "constants");
    in >> rom.constants.L_fnl >> rom.constants.L_wnl >> rom.constants.L_rnl >>
        rom.constants.L_Cw >> rom.constants.lambda_An >> rom.constants.lambda_Ar;
    if (!in) throw std::runtime_error("rom file: truncated constants");
    rom.validate();
    return rom;
}

/// Constants files share one key-value schema; fitted tube constants carry
/// `source = fitted` plus their data-driven extras.
inline KeyValueFile constants_to_kv(const RomConstants& k, const std::string& source) {
    KeyValueFile kv;
    kv.set("type", "rompc-constants-v1");
    kv.set("source", source);
    kv.set_double("L_fnl", k.L_fnl);
    kv.set_double("L_wnl", k.L_wnl);
    kv.set_double("L_rnl", k.L_rnl);
    kv.set_double("L_Cw", k.L_Cw);
    kv.set_double("lambda_An", k.lambda_An);
    kv.set_double("lambda_Ar", k.lambda_Ar);
    return kv;
}

inline RomConstants constants_from_kv(const KeyValueFile& kv) {
    if (kv.get_string("type", "") != "rompc-constants-v1") {
        throw std::runtime_error("constants file: unknown type tag");
    }
    RomConstants k;
    k.L_fnl = kv.get_double("L_fnl");
    k.L_wnl = kv.get_double("L_wnl", 0.0);
    k.L_rnl = kv.get_double("L_rnl");
    k.L_Cw = kv.get_double("L_Cw");
    k.lambda_An = kv.get_double("lambda_An");
    k.lambda_Ar = kv.get_double("lambda_Ar");
    return k;
}

/// Trajectory CSV with the `t,x_1..x_{n_f},u_1..u_m` layout; inputs may be
/// omitted for autonomous data.
inline void write_trajectory_csv(const Trajectory& traj, const PiecewiseConstantSignal* u,
                                 const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write trajectory: " + path);
    const int n_f = static_cast<int>(traj.states.rows());
    out << "t";
    for (int i = 1; i <= n_f; ++i) out << ",x_" << i;
    if (u) {
        for (int i = 1; i <= u->dim(); ++i) out << ",u_" << i;
    }
    out << "\n" << std::setprecision(17);
    for (int k = 0; k < traj.samples(); ++k) {
        out << traj.times[k];
        for (int i = 0; i < n_f; ++i) out << "," << traj.states(i, k);
        if (u) {
            const Vector uk = u->at(traj.times[k]);
            for (int i = 0; i < uk.size(); ++i) out << "," << uk[i];
        }
        out << "\n";
    }
}

inline Trajectory read_trajectory_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open trajectory: " + path);
    std::string header;
    if (!std::getline(in, header)) throw std::runtime_error("trajectory csv: empty file");
    int n_x = 0;
    {
        std::istringstream hs(header);
        std::string col;
        bool first = true;
        while (std::getline(hs, col, ',')) {
            if (first) {
                if (col != "t") throw std::runtime_error("trajectory csv: first column must be t");
                first = false;
            } else if (col.rfind("x_", 0) == 0) {
                ++n_x;
            }
        }
    }
    if (n_x == 0) throw std::runtime_error("trajectory csv: no state columns");
    std::vector<double> times;
    std::vector<Vector> states;
    std::string line;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string cell;
        std::vector<double> row;
        while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
        if (static_cast<int>(row.size()) < 1 + n_x) {
            throw std::runtime_error("trajectory csv: short row at line " +
                                     std::to_string(lineno));
        }
        times.push_back(row[0]);
        Vector x(n_x);
        for (int i = 0; i < n_x; ++i) x[i] = row[1 + i];
        states.push_back(x);
    }
    Trajectory traj;
    traj.times = std::move(times);
    traj.states.resize(n_x, static_cast<int>(states.size()));
    for (int k = 0; k < traj.samples(); ++k) traj.states.col(k) = states[k];
    return traj;
}

}  // namespace rompc
