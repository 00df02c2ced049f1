#ifndef MTSIM_H
#define MTSIM_H

/* C interface to the simulation library: scenario loading and execution plus
 * a handful of direct kernels. All functions return 0 on success or a nonzero
 * code (2 validation, 3 numerical, 4 bad argument); the message for the last
 * failure on the calling thread is available from mtsim_last_error(). */

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#define MTSIM_OK 0
#define MTSIM_ERR_VALIDATION 2
#define MTSIM_ERR_NUMERICAL 3
#define MTSIM_ERR_ARGUMENT 4

const char* mtsim_version(void);

/* Message for the most recent failure on this thread; empty string if none. */
const char* mtsim_last_error(void);

/* --- scenarios --- */

typedef struct mtsim_scenario mtsim_scenario;

int mtsim_scenario_load_file(const char* path, mtsim_scenario** out);
int mtsim_scenario_load_text(const char* text, mtsim_scenario** out);
int mtsim_scenario_set_seed(mtsim_scenario* s, uint64_t seed);
int mtsim_scenario_set_output_dir(mtsim_scenario* s, const char* dir);
const char* mtsim_scenario_subcommand(const mtsim_scenario* s);

/* Executes the scenario, writing its artifacts. Returns 0, 2 or 3. */
int mtsim_scenario_run(mtsim_scenario* s);

void mtsim_scenario_free(mtsim_scenario* s);

/* Writes the key schema for one subcommand (or the newline-separated
 * subcommand list) into buf; truncates if buflen is too small. */
int mtsim_schema_text(const char* subcommand, char* buf, size_t buflen);
int mtsim_subcommand_list(char* buf, size_t buflen);

/* --- direct kernels --- */

/* Roots of psi^3 - psi - sigma, ascending; requires |sigma| < 2/(3 sqrt 3). */
int mtsim_solve_cubic(double sigma, double* a, double* d, double* b);

/* Heteroclinic profile value at xi for the given root triple. */
int mtsim_kink_profile(double xi, double a, double d, double b, double* psi);

/* hbar M_gus / (E^2 N), energies in eV, result in seconds. */
int mtsim_collapse_time_string(double m_gus_ev, double e_ev, double n,
                               double* seconds);

/* Boosted central charges; c_t + c_x = 26. */
int mtsim_central_charges(double vs_squared, double* c_t, double* c_x);

/* e^dilaton_a / sqrt(k - 2); requires k > 2. */
int mtsim_adm_mass_vs_k(double k, double dilaton_a, double* mass);

#ifdef __cplusplus
}
#endif

#endif /* MTSIM_H */
