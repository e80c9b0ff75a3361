#ifndef GLAVA_DATASET_HPP
#define GLAVA_DATASET_HPP

#include <Eigen/Core>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "glava/csv.hpp"
#include "glava/errors.hpp"
#include "glava/link.hpp"

namespace glava {

// Regression data: response y, n x p design X, optional auxiliary response w
// (the second regression target of the edge test).
struct Dataset {
    Vector y;
    Matrix X;
    std::optional<Vector> w;
    std::vector<std::string> feature_names;

    Eigen::Index n() const { return X.rows(); }
    Eigen::Index p() const { return X.cols(); }

    static Dataset make(Vector y, Matrix X, std::optional<Vector> w = std::nullopt,
                        std::vector<std::string> feature_names = {}) {
        Dataset d{std::move(y), std::move(X), std::move(w), std::move(feature_names)};
        d.validate();
        return d;
    }

    void validate() const {
        if (X.rows() < 1 || X.cols() < 1) {
            throw std::invalid_argument("Dataset: need at least one row and one feature");
        }
        if (y.size() != X.rows()) {
            throw std::invalid_argument("Dataset: y length does not match X rows");
        }
        if (w && w->size() != X.rows()) {
            throw std::invalid_argument("Dataset: w length does not match X rows");
        }
        if (!feature_names.empty() &&
            static_cast<Eigen::Index>(feature_names.size()) != X.cols()) {
            throw std::invalid_argument("Dataset: feature name count does not match X cols");
        }
        if (!y.allFinite() || !X.allFinite() || (w && !w->allFinite())) {
            throw std::invalid_argument("Dataset: NaN or Inf entry");
        }
    }

    void validate_for(const LinkSpec& link) const {
        for (Eigen::Index i = 0; i < y.size(); ++i) {
            if (!link.valid_response(y[i])) {
                throw std::invalid_argument(std::string("Dataset: response invalid for ") +
                                            link.name() + " link at row " +
                                            std::to_string(i + 1));
            }
        }
    }
};

// Mean M-loss over the sample: (1/n) sum_i l(y_i, x_i' theta).
inline double empirical_loss(const Dataset& data, const LinkSpec& link, const Vector& theta) {
    if (theta.size() != data.p()) {
        throw std::invalid_argument("empirical_loss: theta dimension mismatch");
    }
    const Vector eta = data.X * theta;
    double total = 0.0;
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
        total += -data.y[i] * eta[i] + link.F(eta[i]);
    }
    return total / static_cast<double>(data.n());
}

// Gradient of empirical_loss: (1/n) X' (f(X theta) - y).
inline Vector loss_gradient(const Dataset& data, const LinkSpec& link, const Vector& theta) {
    if (theta.size() != data.p()) {
        throw std::invalid_argument("loss_gradient: theta dimension mismatch");
    }
    Vector resid = data.X * theta;
    for (Eigen::Index i = 0; i < resid.size(); ++i) {
        resid[i] = link.f(resid[i]) - data.y[i];
    }
    return (data.X.transpose() * resid) / static_cast<double>(data.n());
}

// Loss and gradient from one pass over X; the solver's hot path.
inline double loss_and_gradient(const Dataset& data, const LinkSpec& link, const Vector& theta,
                                Vector& grad_out) {
    Vector eta = data.X * theta;
    double total = 0.0;
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
        total += -data.y[i] * eta[i] + link.F(eta[i]);
        eta[i] = link.f(eta[i]) - data.y[i];
    }
    const double inv_n = 1.0 / static_cast<double>(data.n());
    grad_out.noalias() = data.X.transpose() * eta;
    grad_out *= inv_n;
    return total * inv_n;
}

// Dataset CSV: header row; column `y` is the response, optional column `w`
// the auxiliary response, every other column a feature (file order kept).
inline Dataset read_dataset_csv(const std::string& path) {
    std::ifstream in = open_input(path);
    std::string line;
    if (!std::getline(in, line)) throw io_error("'" + path + "' is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();

    const std::vector<std::string> header = split_csv_line(line);
    int y_col = -1;
    int w_col = -1;
    std::vector<int> feature_cols;
    std::vector<std::string> names;
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (header[c] == "y") {
            y_col = static_cast<int>(c);
        } else if (header[c] == "w") {
            w_col = static_cast<int>(c);
        } else {
            feature_cols.push_back(static_cast<int>(c));
            names.push_back(header[c]);
        }
    }
    if (y_col < 0) throw std::invalid_argument("'" + path + "': missing required column 'y'");
    if (feature_cols.empty()) {
        throw std::invalid_argument("'" + path + "': no feature columns");
    }

    std::vector<std::vector<double>> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::vector<std::string> fields = split_csv_line(line);
        if (fields.size() != header.size()) {
            throw std::invalid_argument("'" + path + "' line " + std::to_string(line_no) +
                                        ": expected " + std::to_string(header.size()) +
                                        " fields, got " + std::to_string(fields.size()));
        }
        std::vector<double> row(fields.size());
        for (std::size_t c = 0; c < fields.size(); ++c) {
            row[c] = parse_double(fields[c],
                                  "at '" + path + "' line " + std::to_string(line_no));
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw std::invalid_argument("'" + path + "': no data rows");

    const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
    const Eigen::Index p = static_cast<Eigen::Index>(feature_cols.size());
    Vector y(n);
    Matrix X(n, p);
    std::optional<Vector> w;
    if (w_col >= 0) w = Vector(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        y[i] = rows[i][static_cast<std::size_t>(y_col)];
        if (w) (*w)[i] = rows[i][static_cast<std::size_t>(w_col)];
        for (Eigen::Index j = 0; j < p; ++j) {
            X(i, j) = rows[i][static_cast<std::size_t>(feature_cols[static_cast<std::size_t>(j)])];
        }
    }
    return Dataset::make(std::move(y), std::move(X), std::move(w), std::move(names));
}

inline void write_dataset_csv(const Dataset& data, const std::string& path) {
    std::ofstream out = open_output(path);
    out << "y";
    if (data.w) out << ",w";
    for (Eigen::Index j = 0; j < data.p(); ++j) {
        out << ',';
        if (!data.feature_names.empty()) {
            out << data.feature_names[static_cast<std::size_t>(j)];
        } else {
            out << 'x' << (j + 1);
        }
    }
    out << '\n';
    for (Eigen::Index i = 0; i < data.n(); ++i) {
        out << format_double(data.y[i]);
        if (data.w) out << ',' << format_double((*data.w)[i]);
        for (Eigen::Index j = 0; j < data.p(); ++j) {
            out << ',' << format_double(data.X(i, j));
        }
        out << '\n';
    }
    if (!out) throw io_error("failed writing '" + path + "'");
}

}  // namespace glava

#endif  // GLAVA_DATASET_HPP
