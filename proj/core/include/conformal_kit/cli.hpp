#ifndef CONFORMAL_KIT_CLI_HPP
#define CONFORMAL_KIT_CLI_HPP

namespace conformal {

/**
 * Entry point behind the command-line tool.  Exit status 0 on success, 1 on
 * usage or configuration errors, 2 when a run with a pass criterion fails it.
 */
int cli_main(int argc, char** argv);

}  // namespace conformal

#endif  // CONFORMAL_KIT_CLI_HPP
