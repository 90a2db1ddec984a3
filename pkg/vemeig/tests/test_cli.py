"""
Module tests.test_cli
------------------
:author: vemeig developers
This is a test module to test the command line front-end and its exit codes.
"""

from pytest import mark

from vemeig import cli
from vemeig.vem_local import ElementError


def test_mesh_gen_and_stats(tmp_path, capsys):
    path = tmp_path/'m.json'
    assert cli.cli_main(['mesh', 'gen', '--kind', 'dyadic', '--n', '4', '-o', str(path)]) == 0
    assert path.exists()
    capsys.readouterr()
    assert cli.cli_main(['mesh', 'stats', str(path)]) == 0
    out = capsys.readouterr().out
    assert '65 vertices' in out
    assert '16 cells' in out
    assert cli.cli_main(['mesh', 'validate', str(path)]) == 0


def test_hexagon_needs_rows(tmp_path):
    path = tmp_path/'h.json'
    assert cli.cli_main(['mesh', 'gen', '--kind', 'hexagon', '--n', '3', '-o', str(path)]) == 1
    assert cli.cli_main(['mesh', 'gen', '--kind', 'hexagon', '--n', '3', '--m', '4', '-o', str(path)]) == 0


def test_invalid_mesh_file(tmp_path, capsys):
    path = tmp_path/'bad.json'
    path.write_text('{"format": "vemeig-mesh", "version": 1, "vertices": [[0, 0]], "cells": [[0, 0, 0]]}')
    assert cli.cli_main(['mesh', 'validate', str(path)]) == 1
    assert cli.cli_main(['mesh', 'stats', str(tmp_path/'missing.json')]) == 1


def test_eig_on_mesh_file(tmp_path, capsys):
    path = tmp_path/'m.json'
    cli.cli_main(['mesh', 'gen', '--kind', 'square', '--n', '4', '-o', str(path)])
    capsys.readouterr()
    prefix = tmp_path/'pencil'
    assert cli.cli_main(['eig', '--mesh', str(path), '--degree', '2', '--num-eigs', '4',
                         '--export', str(prefix)]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == 'index,exact_over_pi2,computed_over_pi2,abs_error_over_pi2'
    assert len(lines) == 5
    assert (tmp_path/'pencil_A.mtx').exists() and (tmp_path/'pencil_B.mtx').exists()


@mark.parametrize('argv',
                 [['eig', '--mesh', 'm.json', '--degree', '5'],
                  ['study', '--family', 'square', '--levles', '4,8'],
                  ['study', '--family', 'pentagon', '--levels', '4'],
                  ['kernel', '--family', 'square', '--levels', '4', '--degree', '0'],
                  [],
                 ])
def test_usage_errors(argv):
    assert cli.cli_main(argv) == 1


def test_unknown_flag_suggestion(capsys):
    assert cli.cli_main(['study', '--family', 'square', '--levles', '4,8']) == 1
    assert "did you mean '--levels'" in capsys.readouterr().err


def test_too_many_eigenvalues_is_a_parameter_error(tmp_path):
    path = tmp_path/'m.json'
    cli.cli_main(['mesh', 'gen', '--kind', 'square', '--n', '4', '-o', str(path)])
    assert cli.cli_main(['eig', '--mesh', str(path), '--degree', '1', '--num-eigs', '10']) == 1


def test_numerical_failure_exit_code(tmp_path, monkeypatch):
    path = tmp_path/'m.json'
    cli.cli_main(['mesh', 'gen', '--kind', 'square', '--n', '2', '-o', str(path)])

    def failing_assembly(*args, **kwargs):
        raise ElementError('projector matrix G is singular', element=3)

    monkeypatch.setattr(cli, 'assemble_system', failing_assembly)
    assert cli.cli_main(['eig', '--mesh', str(path), '--degree', '1', '--num-eigs', '1']) == 2


def test_kernel_csv(capsys):
    assert cli.cli_main(['kernel', '--family', 'dyadic', '--levels', '4', '--degree', '1,2']) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines == ['level,k,kernel_dim,dim_Vh', '4,1,9,33', '4,2,42,97']


def test_study_markdown(capsys, tmp_path):
    assert cli.cli_main(['-v', 'study', '--family', 'square', '--levels', '4,8', '--degree', '2',
                         '--num-eigs', '3', '--format', 'md']) == 0
    assert 'Errors (rate)' in capsys.readouterr().out
    output = tmp_path/'study.csv'
    assert cli.cli_main(['study', '--family', 'square', '--levels', '4,8', '--degree', '1',
                         '--num-eigs', '3', '-o', str(output)]) == 0
    assert output.read_text().startswith('family,k,level,h,eig_index')


def test_source_study(capsys):
    assert cli.cli_main(['source', '--family', 'square', '--levels', '4,8', '--degree', '1']) == 0
    assert capsys.readouterr().out.startswith('family,k,level,h,dim_Vh,h1_error,l2_error,h1_rate,l2_rate')
    assert cli.cli_main(['source', '--levels', '4,8']) == 1


def test_large_gate(monkeypatch):
    from vemeig import study
    monkeypatch.setattr(study, 'DENSE_THRESHOLD', 5)
    assert cli.cli_main(['kernel', '--family', 'square', '--levels', '4', '--degree', '1']) == 1
    assert cli.cli_main(['kernel', '--family', 'square', '--levels', '4', '--degree', '1', '--large']) == 0


def test_non_positive_alpha_is_a_usage_error(tmp_path, capsys):
    path = tmp_path/'m.json'
    cli.cli_main(['mesh', 'gen', '--kind', 'square', '--n', '2', '-o', str(path)])
    assert cli.cli_main(['eig', '--mesh', str(path), '--degree', '1', '--num-eigs', '1', '--alpha', '0']) == 1
    assert cli.cli_main(['kernel', '--mesh', str(path), '--degree', '1', '--alpha', '-2']) == 1


def test_preset_keeps_explicit_options():
    parser = cli.build_parser()
    args = parser.parse_args(['study', '--preset', 'vk2', '--alpha', '2.5', '--seed', '7', '--lloyd-iters', '0'])
    config = cli._study_config(args)
    assert (config.alpha, config.seed, config.lloyd_iters) == (2.5, 7, 0)
    assert config.levels == [50, 100, 200, 400, 800]
    defaults = cli._study_config(parser.parse_args(['study', '--preset', 'vk2']))
    assert (defaults.alpha, defaults.seed, defaults.lloyd_iters) == (1.0, 1, 3)
    plain = cli._study_config(parser.parse_args(['kernel', '--family', 'square', '--levels', '4']))
    assert (plain.alpha, plain.seed, plain.lloyd_iters) == (1.0, 1, 3)


def test_table_flag_alias():
    parser = cli.build_parser()
    args = parser.parse_args(['study', '--paper-table', 'tk1'])
    assert args.preset == 'tk1'
    assert cli._study_config(args) == cli._study_config(parser.parse_args(['study', '--preset', 'tk1']))
    assert cli.cli_main(['kernel', '--paper-table', 'nosuchtable']) == 1
